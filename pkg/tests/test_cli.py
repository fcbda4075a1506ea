import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from symm import cli


def run(tmp_path, command, config, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(path), "--out", str(out), *extra])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


def test_schema_ships_with_the_package():
    schema = cli.load_schema()
    assert "scheme" in schema["properties"]


def test_invalid_config_is_a_usage_error(tmp_path, capsys):
    code, report, _ = run(tmp_path, "rank", {"family": "heat", "bogus": 1})
    assert code == 2 and report is None
    assert "invalid config" in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    assert cli.main(["rank", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_rank_report_and_manifest(tmp_path):
    code, report, out = run(tmp_path, "rank", {"family": "wave-yz", "samples": 30})
    assert code == 0
    assert report["mu"] == 10 and report["rank_table"] == {"3": 30}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_sha256"] == report["config_sha256"] == cli.config_hash({"family": "wave-yz", "samples": 30})
    assert manifest["outputs"] == ["manifest.json", "report.json"]


def test_zero_tolerance_fails_verification(tmp_path):
    code, report, _ = run(tmp_path, "verify", {"scheme": "heat", "tol": 0, "zero_set_tol": 0, "samples": 20, "finite_samples": 5})
    assert code == 1 and report["pass"] is False


def test_verify_family_passes(tmp_path):
    code, report, _ = run(tmp_path, "verify", {"family": "linear-ode", "A": "sin", "B": {"table": [[-2, 0], [2, 1]]}, "samples": 30})
    assert code == 0
    kinds = {r["kind"] for r in report["reports"]}
    assert kinds == {"strong", "finite", "weak"}


def test_march_heat_writes_readable_csv(tmp_path):
    code, report, out = run(tmp_path, "march", {"scheme": "heat", "solution": "exponential", "params": {"n_steps": 5, "n_nodes": 8}})
    assert code == 0 and report["max_error_vs_exact"] < 1e-12
    rows = list(csv.reader(io.StringIO((out / "grid.csv").read_text())))
    assert rows[0] == ["m", "n", "x", "t", "u"] and len(rows) == 1 + 6 * 8


def test_march_elliptic_cartesian(tmp_path):
    code, report, out = run(tmp_path, "march", {"scheme": "cartesian-laplace", "params": {"N": 16, "M": 16}})
    assert code == 0 and report["iterations"] > 0
    assert (out / "grid.csv").read_text().startswith("m,n,x,y,u")


def test_march_without_marcher_is_usage_error(tmp_path):
    code, _, _ = run(tmp_path, "march", {"scheme": "laplace-5pt"})
    assert code == 2


def test_transform_check_identity(tmp_path):
    code, report, _ = run(tmp_path, "transform-check", {"scheme": "polar-laplace", "transform": "identity", "samples": 20})
    assert code == 0 and report["max_residual_gap"] == 0.0


def test_convergence_table(tmp_path):
    code, report, out = run(tmp_path, "convergence", {"scheme": "wave-yz"})
    assert code == 0
    orders = report["orders"]
    assert abs(orders["wave-yz"]["order"] - 1) < 0.2 and abs(orders["wave-standard"]["order"] - 2) < 0.2
    header = (out / "orders.csv").read_text().splitlines()[0]
    assert header == "scheme,step_kind,step,error,order,exact"


def test_seed_changes_samples_but_not_verdict(tmp_path):
    cfg = {"family": "heat", "samples": 20, "finite_samples": 5}
    _, a, _ = run(tmp_path, "verify", cfg, "--seed", "1")
    _, b, _ = run(tmp_path, "verify", cfg, "--seed", "2")
    assert a["pass"] and b["pass"]
    assert a["reports"][0]["generators"][0]["max_violation"] != b["reports"][0]["generators"][0]["max_violation"]


def test_parse_function_variants():
    u = np.array([0.0, 0.5, 2.0])
    assert cli.parse_function("zero") is None
    assert np.allclose(cli.parse_function(3)(u), 3.0)
    assert np.allclose(cli.parse_function({"table": [[1, 10], [0, 0]]})(u), [0, 5, 10])
    assert cli.parse_function("curve", "A") is not cli.parse_function("curve", "B")


def test_console_entry_point(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"family": "heat", "samples": 10}))
    proc = subprocess.run([sys.executable, "-m", "symm", "rank", "--config", str(path), "--out", str(tmp_path / "o")], capture_output=True)
    assert proc.returncode == 0


def test_missing_subcommand_exits_with_usage():
    with pytest.raises(SystemExit) as info:
        cli.main([])
    assert info.value.code == 2
