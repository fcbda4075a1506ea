"""
Command-line front end.

    symm verify|rank|march|transform-check|convergence --config FILE [--seed N] [--out DIR]

Every run writes ``report.json`` and ``manifest.json`` (plus CSV data for
``march`` and ``convergence``) into the output directory. JSON is written
with sorted keys and no timestamps, so identical configs and seeds give
byte-identical files. Exit status: 0 pass, 1 verification failure, 2 usage
or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import schemes as S
from .errors import RankUnstable, SymmError
from .invariants import get_family
from .lie import check_finite_invariance, check_strong_invariance, check_weak_invariance, check_zero_set_preservation, z_ranks
from .rng import SplitMix64
from .solvers import Annulus, BoundaryPolicy, interior_residuals, march_heat, march_nonlinear_heat, march_ode, march_wave, solve_elliptic, to_cartesian
from .stencil import build_stencil, build_stencils, grid_to_csv, interior_bases
from .transforms import characteristic, check_commuting_diagram, get_transform, hodograph, polar, pushforward_scheme, pushforward_stencil

COMMANDS = ("verify", "rank", "march", "transform-check", "convergence")
DEFAULT_STEPS = (0.04, 0.02, 0.01, 0.005)


class UsageError(Exception):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("symm").joinpath("config.schema.json").read_text(encoding="utf-8"))


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as exc:
        raise UsageError(f"invalid config: {exc.message}") from None
    return config


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def parse_function(entry, role="F"):
    """Turn a config entry into a one-argument vectorised callable (or None for zero)."""
    if entry is None or entry == "zero":
        return None
    if isinstance(entry, (int, float)):
        c = float(entry)
        return lambda u: np.full(np.shape(u), c)
    if entry == "sin":
        return lambda u: np.sin(u)
    if entry in ("linear", "identity"):
        return lambda u: np.asarray(u, dtype=float)
    if entry == "curve":
        return S.curve_A if role == "A" else S.curve_B
    table = np.asarray(entry["table"], dtype=float)
    order = np.argsort(table[:, 0])
    xs, ys = table[order, 0], table[order, 1]
    return lambda u: np.interp(u, xs, ys)


def _zero_if_none(f):
    return 0.0 if f is None else f


def _params(config):
    return dict(config.get("params", {}))


def build_scheme(config) -> S.Scheme:
    sid = config.get("scheme")
    if sid is None:
        raise UsageError("this command needs a 'scheme'")
    p = _params(config)
    F = parse_function(config.get("F"))
    A = _zero_if_none(parse_function(config.get("A"), "A"))
    B = _zero_if_none(parse_function(config.get("B"), "B"))
    if config.get("solution") == "curve":
        A, B = S.curve_A, S.curve_B
    kwargs = {"F": F, "A": A, "B": B}
    for key in ("eps", "delta", "tau", "h"):
        if key in p:
            kwargs[key] = p[key]
    if sid in ("polar-laplace", "cartesian-laplace") and "N" in p and "M" in p:
        kwargs.setdefault("eps", 1.0 / p["N"])
        kwargs["delta"] = 2 * np.pi / p["M"]
    return S.get_scheme(sid, **kwargs)


def _rng(seed, key):
    return SplitMix64(seed).spawn(key)


# ------------------------------------------------------------------ commands


def cmd_verify(config, seed):
    n = config.get("samples", 200)
    n_fin = config.get("finite_samples", 50)
    tol = config.get("tol", 1e-6)
    finite_tol = config.get("finite_tol", 1e-9)
    zero_tol = config.get("zero_set_tol", 1e-7)
    sweep = tuple(config.get("eps_sweep", (-0.2, -0.05, 0.05, 0.2)))
    reports = []
    key = 0
    if "family" in config:
        fid = config["family"]
        kwargs = {}
        if fid == "linear-ode":
            kwargs = {k: _zero_if_none(parse_function(config.get(k), k)) for k in ("A", "B")}
        fam = get_family(fid, **kwargs)
        target = fid
        for name, f in fam:
            reports.append(check_strong_invariance(f, fam.algebra, fam.sampler, n, tol, _rng(seed, key), name))
            reports.append(check_finite_invariance(f, fam.algebra, fam.sampler, sweep, n_fin, finite_tol, _rng(seed, key + 1), name))
            key += 2
        manifold_sampler = fam.extras.get("manifold_sampler", fam.sampler)
        for E in fam.manifold:
            reports.append(check_weak_invariance(E, fam.algebra, manifold_sampler, n, tol, _rng(seed, key)))
            key += 1
    else:
        scheme = build_scheme(config)
        target = scheme.name
        for E in scheme.equations:
            reports.append(check_weak_invariance(E, scheme.algebra, scheme.sampler, n, tol, _rng(seed, key)))
            key += 1
        reports.append(
            check_zero_set_preservation(lambda c: S.residuals(scheme, c), scheme.algebra, scheme.sampler, sweep, n_fin, zero_tol, _rng(seed, key), scheme.name)
        )
    passed = all(r.passed for r in reports)
    return {"target": target, "pass": passed, "reports": [r.to_dict() for r in reports]}, {}


def cmd_rank(config, seed):
    fid = config.get("family") or config.get("scheme")
    if fid is None:
        raise UsageError("rank needs a 'family'")
    kwargs = {}
    if fid == "linear-ode":
        kwargs = {k: _zero_if_none(parse_function(config.get(k), k)) for k in ("A", "B")}
    try:
        fam = get_family(fid, **kwargs)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    n = config.get("samples", 100)
    ranks = z_ranks(fam.algebra, fam.template, fam.sampler, n, _rng(seed, 0))
    table = {str(int(r)): int(np.sum(ranks == r)) for r in np.unique(ranks)}
    dim_m = fam.manifold_dim if fam.manifold_dim is not None else fam.template.free_dim
    report = {
        "family": fid,
        "dim_M": dim_m,
        "generators": fam.algebra.names,
        "n_samples": n,
        "rank_table": table,
        "members": len(fam),
        "expected_mu": fam.mu,
    }
    if len(table) != 1:
        report.update({"mu": None, "pass": False, "error": str(RankUnstable(ranks))})
        return report, {}
    mu = dim_m - int(ranks[0])
    report["mu"] = mu
    report["pass"] = bool(mu == len(fam) and (fam.mu is None or mu == fam.mu))
    return report, {}


def _heat_solution(config, nonlinear):
    p = _params(config)
    h, tau, t0, x0 = p.get("h", 0.1), p.get("tau", 0.004), p.get("t0", 1.0), p.get("x0", -2.5)
    kind = config.get("solution", "exponential")
    if kind == "exponential":
        c, K = p.get("c", 1.0), p.get("K", 1.0)
        return (S.nl_heat_exponential_solution if nonlinear else S.heat_exponential_solution)(h, tau, c, K, x0, t0)
    if kind == "source":
        return (S.nl_heat_source_solution if nonlinear else S.heat_source_solution)(h, tau, x0, t0)
    return None


def _march_heat(config, scheme):
    p = _params(config)
    nonlinear = scheme.name == "nl-heat"
    n_steps, n_nodes = p.get("n_steps", 50), p.get("n_nodes", 50)
    tau = p.get("tau", 0.004)
    sol = _heat_solution(config, nonlinear)
    marcher = march_nonlinear_heat if nonlinear else march_heat
    if sol is not None:
        first = sol.sample(np.zeros(n_nodes, dtype=int), np.arange(n_nodes))
        res = marcher(first[:, 0], first[:, 2], first[0, 1], tau, n_steps, BoundaryPolicy.trace(sol))
        exact = sol.grid(np.arange(n_steps + 1), np.arange(n_nodes)).coords
        err = float(np.max(np.abs(res.grid.coords - exact)))
        report = {"max_error_vs_exact": err, "pass": err < config.get("tol", 1e-10)}
    else:
        t0 = p.get("t0", 0.5)
        x = np.linspace(-1, 1, n_nodes)
        u = S.heat_smooth(x, t0)
        res = march_nonlinear_heat(u, x, t0, tau, n_steps) if nonlinear else march_heat(x, u, t0, tau, n_steps)
        report = {"pass": True}
    r = interior_residuals(scheme, res.grid)
    report["max_scheme_residual"] = float(np.max(np.abs(r)))
    report.update(res.manifest())
    return report, {"grid.csv": res.grid.to_csv()}


def _march_ode(config, scheme):
    p = _params(config)
    n_steps = p.get("n_steps", 40)
    eps = scheme.params["eps"]
    A, B = scheme.params["A"], scheme.params["B"]
    Af, Bf = S._fn(A), S._fn(B)
    c = p.get("c", 0.0)
    start = p.get("x0", 1.0)
    if scheme.name == "nl-ode":
        y0 = float((Bf(np.array(start)) + c) * np.exp(Af(np.array(start))))
        grid = march_ode(scheme, y0, start, n_steps)
        y, v = grid.coords[:, 0], grid.coords[:, 1]
        curve_at = (Bf(v) + c) * np.exp(Af(v))
        err = float(np.max(np.abs(y - curve_at)))
        vs = np.linspace(v.min(), v.max(), 401)
        curve = np.stack([(Bf(vs) + c) * np.exp(Af(vs)), vs], -1)
        files = {
            "grid.csv": grid.to_csv(extra={"y_curve": curve_at}),
            "curve.csv": grid_to_csv(curve, ("y", "v")),
        }
    else:
        u0 = float((Bf(np.array(start)) + c) * np.exp(Af(np.array(start))))
        grid = march_ode(scheme, start, u0, n_steps)
        x, u = grid.coords[:, 0], grid.coords[:, 1]
        curve_at = (Bf(x) + c) * np.exp(Af(x))
        err = float(np.max(np.abs(u - curve_at)))
        files = {"grid.csv": grid.to_csv(extra={"u_curve": curve_at})}
    return {"max_error_vs_curve": err, "pass": err < config.get("tol", 1e-12), "eps": eps}, files


def _march_wave(config, scheme):
    p = _params(config)
    n_steps, n_nodes = p.get("n_steps", 20), p.get("n_nodes", 30)
    eps, delta = scheme.params["eps"], scheme.params["delta"]
    y0, z0 = p.get("y0", 0.0), p.get("z0", 0.0)
    y = eps * np.arange(n_nodes) + y0
    z = -delta * np.arange(n_steps + 1) - z0
    g, hfun = np.sin, (lambda s: s * s)
    grid = march_wave(scheme, (g(y) + hfun(z[0]), g(y[0]) + hfun(z)), n_steps, y0, z0)
    report = {"max_scheme_residual": float(np.max(np.abs(interior_residuals(scheme, grid))))}
    yz = grid.coords if scheme.name == "wave-yz" else characteristic().forward(grid.coords)
    if scheme.params.get("F") is None:
        err = float(np.max(np.abs(yz[..., 2] - g(yz[..., 0]) - hfun(yz[..., 1]))))
        report["max_error_vs_dalembert"] = err
        report["pass"] = err < config.get("tol", 1e-12)
    else:
        report["pass"] = True
    if scheme.name == "wave-xt":
        mm, nn = np.meshgrid(np.arange(n_steps + 1), np.arange(n_nodes), indexing="ij")
        xl, tl = S.wave_lattice_xt(mm, nn, eps, delta, y0, z0)
        report["max_lattice_deviation"] = float(max(np.max(np.abs(grid.coords[..., 0] - xl)), np.max(np.abs(grid.coords[..., 1] - tl))))
    return report, {"grid.csv": grid.to_csv()}


def _march_elliptic(config, scheme):
    p = _params(config)
    N, M = p.get("N", 64), p.get("M", 64)
    r0 = p.get("r0", 1.0)
    eps = p.get("eps", 1.0 / N)
    polar_scheme = S.polar_laplace_scheme(scheme.params.get("F"), eps, 2 * np.pi / M)
    kind = config.get("solution", "log")
    exact = (lambda r, th: np.log(r)) if kind == "log" else (lambda r, th: np.ones_like(r))
    res = solve_elliptic(polar_scheme, Annulus(r0, eps, N, M), exact, p.get("max_iters", 5000), config.get("tol", 1e-10))
    grid = res.grid
    report = dict(res.manifest())
    if scheme.params.get("F") is None:
        report["max_error_vs_exact"] = float(np.max(np.abs(grid.coords[..., 2] - exact(grid.coords[..., 0], grid.coords[..., 1]))))
    report["pass"] = True
    if scheme.name == "cartesian-laplace":
        grid = to_cartesian(grid)
    return report, {"grid.csv": grid.to_csv()}


def cmd_march(config, seed):
    scheme = build_scheme(config)
    if scheme.name in ("heat", "nl-heat"):
        return _march_heat(config, scheme)
    if scheme.name in ("linear-ode", "nl-ode"):
        return _march_ode(config, scheme)
    if scheme.name in ("wave-yz", "wave-xt"):
        return _march_wave(config, scheme)
    if scheme.name in ("polar-laplace", "cartesian-laplace"):
        return _march_elliptic(config, scheme)
    raise UsageError(f"no marcher for scheme {scheme.name!r}")


def _pair(config):
    """Source scheme, transformation, hand-coded target and a sampler of target stencils."""
    sid = config.get("scheme")
    tid = config.get("transform")
    F = parse_function(config.get("F"))
    p = _params(config)
    if sid == "heat" and tid in (None, "hodograph"):
        from .invariants import nl_heat_sampler

        return S.heat_scheme(), hodograph(2), S.nonlinear_heat_scheme(), nl_heat_sampler
    if sid == "linear-ode" and tid in (None, "hodograph"):
        A = _zero_if_none(parse_function(config.get("A"), "A"))
        B = _zero_if_none(parse_function(config.get("B"), "B"))
        if config.get("solution") == "curve":
            A, B = S.curve_A, S.curve_B
        eps = p.get("eps", 0.1)
        target = S.nonlinear_ode_scheme(A, B, eps)

        def sampler(rng, n):
            return pushforward_stencil(hodograph(1), S.linear_ode_scheme(A, B, eps).sampler(rng, n))

        return S.linear_ode_scheme(A, B, eps), hodograph(1), target, sampler
    if sid == "wave-yz" and tid in (None, "characteristic"):
        eps, delta = p.get("eps", 0.1), p.get("delta", 0.1)
        from .invariants import wave_xt_sampler

        return S.wave_scheme_yz(F, eps, delta), characteristic().inverted(), S.wave_scheme_xt(F, eps, delta), wave_xt_sampler
    if sid == "polar-laplace" and tid in (None, "polar"):
        eps, delta = p.get("eps", 0.1), p.get("delta", 0.1)
        src = S.polar_laplace_scheme(F, eps, delta)
        direct = S.cartesian_laplace_direct(F, eps, delta)
        target = S.Scheme("cartesian-direct", S.CARTESIAN_TEMPLATE, tuple(_component(direct, k) for k in range(5)))
        return src, polar(), target, lambda rng, n: pushforward_stencil(polar(), src.sampler(rng, n), S.CARTESIAN_TEMPLATE)
    if tid == "identity" and sid is not None:
        src = build_scheme(config)
        return src, get_transform("identity", src.p), src, src.sampler
    raise UsageError(f"no transform check for scheme {sid!r} with transformation {tid!r}")


def _component(E, k):
    def f(c):
        return E(c)[..., k]

    return f


def cmd_transform_check(config, seed):
    src, psi, target, sampler = _pair(config)
    n = config.get("samples", 100)
    tol = config.get("tol", 1e-12)
    pushed = pushforward_scheme(psi, src, template=target.template)
    configs = sampler(_rng(seed, 0), n)
    gap = float(np.max(np.abs(S.residuals(pushed, configs) - S.residuals(target, configs))))
    report = {
        "source": src.name,
        "transformation": psi.name,
        "target": target.name,
        "n_samples": n,
        "max_residual_gap": gap,
        "residual_gap_pass": gap < tol,
    }
    ok = gap < tol
    if src.name == "heat" and psi.name == "hodograph":
        transport = {}
        for kind, sol in (("exponential", S.heat_exponential_solution(x0=-2.5)), ("source", S.heat_source_solution(x0=-2.5))):
            image = S.hodograph_solution(sol)
            grid = image.grid(np.arange(50), np.arange(50))
            r = S.residuals(target, build_stencils(grid, interior_bases(grid, target.template), target.template))
            transport[kind] = float(np.max(np.abs(r)))
        report["solution_transport"] = transport
        ok = ok and all(v < 1e-10 for v in transport.values())
        steps = tuple(_params(config).get("steps", DEFAULT_STEPS))
        diagram = check_commuting_diagram(psi, src, S.heat_probe, steps, target, S.nl_heat_probe)
        report["diagram"] = diagram.to_dict()
        ok = ok and diagram.passed
    if src.name == "wave-yz":
        steps = tuple(_params(config).get("steps", DEFAULT_STEPS))
        lin = S.wave_scheme_yz(lambda u: u, src.params["eps"], src.params["delta"])
        tgt = S.wave_scheme_xt(lambda u: u, src.params["eps"], src.params["delta"])
        diagram = check_commuting_diagram(psi, lin, S.wave_probe_yz, steps, tgt)
        report["diagram"] = diagram.to_dict()
        ok = ok and diagram.passed
    report["pass"] = bool(ok)
    return report, {}


def _convergence_rows(config):
    sid = config.get("scheme")
    steps = list(_params(config).get("steps", DEFAULT_STEPS))
    rows = []

    def add(label, est, step_name="h"):
        rows.append((label, step_name, est))

    if sid in ("heat", "heat-ftcs"):
        add("heat", S.consistency_order(S.heat_scheme(), S.heat_probe, steps))
        exact = S.heat_exponential_solution

        def exact_probe(h):
            return build_stencil(exact(h=h, tau=h * h, x0=0.0).grid(np.arange(2), np.arange(3)), (0, 1), S.HEAT_TEMPLATE)

        add("heat:exponential-family", S.consistency_order(S.heat_scheme(), exact_probe, steps))
        add("heat-ftcs", S.consistency_order(S.heat_ftcs_scheme(), S.heat_ftcs_probe, [h * h / 4 for h in steps]), "tau")
    elif sid == "nl-heat":
        add("nl-heat", S.consistency_order(S.nonlinear_heat_scheme(), S.nl_heat_probe, steps))
    elif sid in ("wave-yz", "wave-xt", "wave-standard"):
        yz = S.wave_scheme_yz(lambda u: u)
        add("wave-yz", S.consistency_order(yz, S.wave_probe_yz, steps))
        xt = S.wave_scheme_xt(lambda u: u)
        inv = characteristic().inverted()
        add("wave-xt", S.consistency_order(xt, lambda h: pushforward_stencil(inv, S.wave_probe_yz(h), S.WAVE_XT_TEMPLATE), steps))
        add("wave-standard", S.consistency_order(S.wave_standard_scheme(lambda u: u), S.wave_standard_probe, steps))
    elif sid in ("polar-laplace", "cartesian-laplace", "laplace-5pt"):
        add("polar-laplace", S.consistency_order(S.polar_laplace_scheme(4.0), S.polar_probe, steps))
        add("laplace-5pt", S.consistency_order(S.laplace_5pt_scheme(4.0), S.laplace_probe, steps))
    elif sid in ("linear-ode", "nl-ode"):
        A = _zero_if_none(parse_function(config.get("A"), "A"))
        B = _zero_if_none(parse_function(config.get("B"), "B"))
        if config.get("solution") == "curve":
            A, B = S.curve_A, S.curve_B

        def ode_probe(h):
            sol = S.linear_ode_solution(A, B, h, c=0.5, x0=1.0)
            return S.StencilConfig(S.LINEAR_ODE_TEMPLATE, sol.sample(np.arange(2)))

        add("linear-ode", S.consistency_order(S.linear_ode_scheme(A, B), ode_probe, steps))
    else:
        raise UsageError(f"no convergence study for scheme {sid!r}")
    return rows


def cmd_convergence(config, seed):
    rows = _convergence_rows(config)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "step_kind", "step", "error", "order", "exact"])
    for label, kind, est in rows:
        order = "" if est.order is None else format(est.order, ".17g")
        for h, e in zip(est.steps, est.errors):
            w.writerow([label, kind, format(h, ".17g"), format(e, ".17g"), order, str(est.exact).lower()])
    invariant = [est for label, _, est in rows if not label.startswith(("heat-ftcs", "wave-standard", "laplace-5pt"))]
    ok = all(est.exact or (est.order is not None and est.order >= 0.8) for est in invariant)
    report = {"orders": {label: est.to_dict() for label, _, est in rows}, "pass": ok}
    return report, {"orders.csv": buf.getvalue()}


HANDLERS = {
    "verify": cmd_verify,
    "rank": cmd_rank,
    "march": cmd_march,
    "transform-check": cmd_transform_check,
    "convergence": cmd_convergence,
}


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return repr(o)


def run(command: str, config: dict, seed: int, out: Path) -> int:
    report, files = HANDLERS[command](config, seed)
    digest = config_hash(config)
    report = {"command": command, "config_sha256": digest, "seed": seed, **report}
    out.mkdir(parents=True, exist_ok=True)
    outputs = {"report.json": _json(report), **files}
    manifest = {
        "command": command,
        "config": config,
        "config_sha256": digest,
        "seed": seed,
        "outputs": sorted(list(outputs) + ["manifest.json"]),
        "pass": bool(report.get("pass", False)),
    }
    outputs["manifest.json"] = _json(manifest)
    for name, text in outputs.items():
        with open(out / name, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0 if report.get("pass") else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symm", description="Invariant difference schemes: verification, marching, transport checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config)")
        sp.add_argument("--out", default="out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        seed = args.seed if args.seed is not None else config.get("seed", 0)
        if seed < 0:
            raise UsageError("seed must be non-negative")
        return run(args.command, config, seed, Path(args.out))
    except (UsageError, KeyError) as exc:
        print(f"symm: {exc}", file=sys.stderr)
        return 2
    except SymmError as exc:
        print(f"symm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
