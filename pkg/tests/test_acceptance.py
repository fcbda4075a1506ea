"""
Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected in the terminal summary under
"acceptance criteria".
"""
import json
import time

import numpy as np
import pytest

from symm import cli
from symm import schemes as S
from symm.invariants import get_family, nl_heat_sampler, wave_xt_sampler
from symm.lie import SymmetryAlgebra, check_strong_invariance, check_weak_invariance, check_zero_set_preservation
from symm.rng import SplitMix64
from symm.solvers import Annulus, interior_residuals, march_ode, march_wave, solve_elliptic
from symm.stencil import StencilConfig
from symm.transforms import (
    characteristic,
    check_commuting_diagram,
    hodograph,
    pushforward_scheme,
    pushforward_solution,
    pushforward_stencil,
)

criterion = pytest.mark.criterion
EPS_SWEEP = (-0.2, -0.05, 0.05, 0.2)


def lattice_residual(scheme, grid):
    return float(np.max(np.abs(interior_residuals(scheme, grid))))


@criterion("AC1", "exact discrete heat solutions on a 50x50 window")
def test_ac1_exact_heat_solutions(acceptance):
    scheme = S.heat_scheme()
    families = {
        "exponential": S.heat_exponential_solution(h=0.1, tau=0.01, c=1.0, K=1.0, x0=0.0, t0=1.0),
        "source": S.heat_source_solution(h=0.1, tau=0.01, x0=0.0, t0=1.0),
    }
    start = time.perf_counter()
    for name, sol in families.items():
        grid = sol.grid(np.arange(50), np.arange(50))
        r = lattice_residual(scheme, grid)
        acceptance.check(f"{name} residual", f"{r:.2e}", r < 1e-10)
    elapsed = time.perf_counter() - start
    acceptance.check("runtime", f"{elapsed:.2f}s", elapsed < 5.0)
    assert acceptance.passed


@criterion("AC2", "invariant counting mu=4 (heat), mu=2 (linear ODE)")
def test_ac2_invariant_counting(acceptance):
    for family, expected in (("heat", 4), ("linear-ode", 2)):
        report, _ = cli.cmd_rank({"family": family, "samples": 100}, 0)
        stable = len(report["rank_table"]) == 1 and sum(report["rank_table"].values()) == 100
        acceptance.check(f"{family} rank stable", report["rank_table"], stable)
        acceptance.check(f"{family} mu", report["mu"], report["mu"] == expected)
    assert acceptance.passed


def ode_A(x):
    return 0.5 * np.sin(x)


def ode_B(x):
    return np.asarray(x, dtype=float) ** 2


INVARIANT_SCHEMES = {
    "heat": lambda: S.heat_scheme(),
    "nl-heat": lambda: S.nonlinear_heat_scheme(),
    "linear-ode": lambda: S.linear_ode_scheme(ode_A, ode_B, 0.1),
    "nl-ode": lambda: S.nonlinear_ode_scheme(ode_A, ode_B, 0.1),
    "wave-yz": lambda: S.wave_scheme_yz(np.sin, 0.1, 0.1),
    "wave-xt": lambda: S.wave_scheme_xt(np.sin, 0.1, 0.1),
    "polar-laplace": lambda: S.polar_laplace_scheme(lambda u, r: u * u, 0.1, 0.1),
    "cartesian-laplace": lambda: S.cartesian_laplace_scheme(lambda u, r: u * u, 0.1, 0.1),
}


@criterion("AC3", "weak invariance, zero-set preservation, strong invariance of families")
def test_ac3_invariance_suites(acceptance):
    for name, make in INVARIANT_SCHEMES.items():
        scheme = make()
        rng = SplitMix64(3).spawn(len(name))
        worst = 0.0
        for E in scheme.equations:
            rep = check_weak_invariance(E, scheme.algebra, scheme.sampler, 200, 1e-6, rng)
            worst = max(worst, rep.max_violation)
        acceptance.check(f"{name} weak", f"{worst:.1e}", worst < 1e-6)
        zs = check_zero_set_preservation(lambda c, s=scheme: S.residuals(s, c), scheme.algebra, scheme.sampler, EPS_SWEEP, 50, 1e-7, rng)
        acceptance.check(f"{name} zero-set", f"{zs.max_violation:.1e}", zs.passed)
    for fid in ("heat", "nl-heat", "wave-yz", "wave-xt", "linear-ode"):
        fam = get_family(fid, A=ode_A, B=ode_B) if fid == "linear-ode" else get_family(fid)
        rng = SplitMix64(5).spawn(len(fid))
        worst = 0.0
        for _, f in fam:
            worst = max(worst, check_strong_invariance(f, fam.algebra, fam.sampler, 200, 1e-6, rng).max_violation)
        acceptance.check(f"{fid} strong", f"{worst:.1e}", worst < 1e-6)
    assert acceptance.passed


@criterion("AC4", "pushforward schemes equal hand-coded targets; pushed solutions stay exact")
def test_ac4_functorial_pushforward(acceptance):
    rng = SplitMix64(11)

    def gap(source, psi, target, sampler):
        pushed = pushforward_scheme(psi, source, template=target.template)
        configs = sampler(rng.spawn(len(target.name)), 100)
        return float(np.max(np.abs(S.residuals(pushed, configs) - S.residuals(target, configs))))

    g = gap(S.heat_scheme(), hodograph(2), S.nonlinear_heat_scheme(), nl_heat_sampler)
    acceptance.check("heat->nl-heat", f"{g:.1e}", g < 1e-12)

    lin = S.linear_ode_scheme(S.curve_A, S.curve_B, 0.1)
    nl = S.nonlinear_ode_scheme(S.curve_A, S.curve_B, 0.1)
    g = gap(lin, hodograph(1), nl, lambda r, n: pushforward_stencil(hodograph(1), lin.sampler(r, n)))
    acceptance.check("linear-ode->nl-ode", f"{g:.1e}", g < 1e-12)

    g = gap(S.wave_scheme_yz(np.sin), characteristic().inverted(), S.wave_scheme_xt(np.sin), wave_xt_sampler)
    acceptance.check("wave yz->xt", f"{g:.1e}", g < 1e-12)

    target = S.nonlinear_heat_scheme()
    for name, sol in (
        ("exponential", S.heat_exponential_solution(h=0.1, tau=0.01, x0=-2.5)),
        ("source", S.heat_source_solution(h=0.1, tau=0.01, x0=-2.5)),
    ):
        image = pushforward_solution(hodograph(2), sol)
        r = lattice_residual(target, image.grid(np.arange(50), np.arange(50)))
        acceptance.check(f"pushed {name} heat solution", f"{r:.1e}", r < 1e-10)

    sol = S.linear_ode_solution(S.curve_A, S.curve_B, 0.1, c=0.5, x0=0.2)
    image = pushforward_solution(hodograph(1), sol)
    pts = image.sample(np.arange(30))
    c = StencilConfig(nl.template, np.stack([pts[:-1], pts[1:]], axis=-2))
    r = float(np.max(np.abs(S.residuals(nl, c))))
    acceptance.check("pushed ODE solution", f"{r:.1e}", r < 1e-10)
    assert acceptance.passed


@criterion("AC5", "commuting diagram: both heat schemes first-order consistent")
def test_ac5_commuting_diagram(acceptance):
    start = time.perf_counter()
    report = check_commuting_diagram(
        hodograph(2), S.heat_scheme(), S.heat_probe, (0.04, 0.02, 0.01, 0.005), S.nonlinear_heat_scheme(), S.nl_heat_probe
    )
    elapsed = time.perf_counter() - start
    for side, est in (("heat", report.source), ("nl-heat", report.target)):
        acceptance.check(f"{side} order", f"{est.order:.3f}", est.order >= 0.8)
    acceptance.check("functorial gap", f"{report.max_functorial_gap:.1e}", report.max_functorial_gap < 1e-12)
    acceptance.check("runtime", f"{elapsed:.2f}s", elapsed < 30.0)
    assert acceptance.passed


@criterion("AC6", "wave: d'Alembert data reproduced; boost invariance of xt residuals")
def test_ac6_wave(acceptance):
    eps = delta = 0.1
    N, n_steps = 30, 20
    g, h = np.sin, (lambda s: s * s)
    y = eps * np.arange(N)
    z = -delta * np.arange(n_steps + 1)
    for name in ("wave-yz", "wave-xt"):
        scheme = S.get_scheme(name, F=None, eps=eps, delta=delta)
        grid = march_wave(scheme, (g(y) + h(z[0]), g(y[0]) + h(z)), n_steps)
        yz = grid.coords if name == "wave-yz" else characteristic().forward(grid.coords)
        err = float(np.max(np.abs(yz[..., 2] - g(yz[..., 0]) - h(yz[..., 1]))))
        r = lattice_residual(scheme, grid)
        acceptance.check(f"{name} d'Alembert error", f"{err:.1e}", err < 1e-12)
        acceptance.check(f"{name} residual", f"{r:.1e}", r < 1e-12)

    xt = S.wave_scheme_xt(np.sin, eps, delta)
    boost = SymmetryAlgebra((xt.algebra[0],), 2, 1)
    rep = check_zero_set_preservation(lambda c: S.residuals(xt, c), boost, xt.sampler, EPS_SWEEP, 100, 1e-8, SplitMix64(21))
    acceptance.check("boost zero-set", f"{rep.max_violation:.1e}", rep.passed)
    assert acceptance.passed


def _rotate(config, angle):
    c = np.array(config.coords)
    x, y = c[..., 0].copy(), c[..., 1].copy()
    c[..., 0] = np.cos(angle) * x - np.sin(angle) * y
    c[..., 1] = np.sin(angle) * x + np.cos(angle) * y
    return config.with_coords(c)


@criterion("AC7", "elliptic: SOR converges, O(eps) error, rotation-invariant cartesian residuals")
def test_ac7_elliptic(acceptance):
    errors = []
    for N in (64, 128):
        eps, M = 1.0 / N, 64
        scheme = S.polar_laplace_scheme(None, eps, 2 * np.pi / M)
        res = solve_elliptic(scheme, Annulus(1.0, eps, N, M), lambda r, th: np.log(r), max_iters=5000, tol=1e-10)
        u = res.grid.coords
        errors.append(float(np.max(np.abs(u[..., 2] - np.log(u[..., 0])))))
        if N == 64:
            acceptance.check("64x64 sweeps", res.iterations, res.iterations <= 5000)
    ratio = errors[0] / errors[1]
    acceptance.check("error ratio on halving eps", f"{ratio:.2f}", 1.6 <= ratio <= 2.4)

    cart = S.cartesian_laplace_scheme(lambda u, r: u * u, 0.1, 0.1)
    configs = cart.sampler(SplitMix64(31), 100)
    base = S.residuals(cart, configs)
    worst = 0.0
    for angle in (0.3, 1.0, 2.5, -2.0, np.sqrt(2.0)):
        worst = max(worst, float(np.max(np.abs(S.residuals(cart, _rotate(configs, angle)) - base))))
    acceptance.check("rotation change", f"{worst:.1e}", worst < 1e-12)
    assert acceptance.passed


@criterion("AC8", "nonlinear ODE march lies on y=(B(v)+c)exp(A(v))")
def test_ac8_curve_run(acceptance, tmp_path):
    config = {"scheme": "nl-ode", "solution": "curve", "params": {"eps": 0.05, "x0": 1.0, "n_steps": 40}}
    path = tmp_path / "curve.json"
    path.write_text(json.dumps(config))
    code = cli.main(["march", "--config", str(path), "--out", str(tmp_path / "run")])
    acceptance.check("exit status", code, code == 0)

    scheme = S.nonlinear_ode_scheme(S.curve_A, S.curve_B, 0.05)
    v0 = 1.0
    grid = march_ode(scheme, float(S.curve_B(np.array(v0)) * np.exp(S.curve_A(np.array(v0)))), v0, 40)
    y, v = grid.coords[:, 0], grid.coords[:, 1]
    err = float(np.max(np.abs(y - S.curve_B(v) * np.exp(S.curve_A(v)))))
    acceptance.check("distance to curve", f"{err:.1e}", err < 1e-12)

    header = (tmp_path / "run" / "grid.csv").read_text().splitlines()[0].split(",")
    acceptance.check("points csv has curve column", header, "y_curve" in header)
    acceptance.check("curve csv written", "curve.csv", (tmp_path / "run" / "curve.csv").exists())
    assert acceptance.passed


DETERMINISM_RUNS = [
    ("verify", {"family": "heat", "samples": 40, "finite_samples": 10}),
    ("rank", {"family": "linear-ode"}),
    ("march", {"scheme": "heat", "solution": "source", "params": {"n_steps": 10, "n_nodes": 20}}),
    ("march", {"scheme": "wave-xt", "F": "sin"}),
    ("transform-check", {"scheme": "wave-yz", "transform": "characteristic", "F": "sin"}),
    ("convergence", {"scheme": "polar-laplace"}),
]


@criterion("AC9", "determinism: identical config and seed give byte-identical outputs")
def test_ac9_determinism(acceptance, tmp_path):
    for k, (command, config) in enumerate(DETERMINISM_RUNS):
        path = tmp_path / f"c{k}.json"
        path.write_text(json.dumps(config))
        outs = []
        for rep in range(2):
            out = tmp_path / f"run{k}_{rep}"
            cli.main([command, "--config", str(path), "--seed", "17", "--out", str(out)])
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        same = outs[0] == outs[1] and len(outs[0]) >= 2
        acceptance.check(f"{command}#{k}", sorted(outs[0]), same)
    assert acceptance.passed
