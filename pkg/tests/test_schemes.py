import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symm import schemes as S
from symm.errors import StepTooLarge
from symm.lie import check_weak_invariance
from symm.rng import SplitMix64
from symm.stencil import HAT, ZERO, StencilConfig, build_stencils, interior_bases
from symm.transforms import pushforward_stencil, polar


def scheme_kwargs(name):
    if name in ("wave-yz", "wave-xt", "wave-standard"):
        return {"F": np.sin}
    if name in ("polar-laplace", "cartesian-laplace", "laplace-5pt"):
        return {"F": lambda u, r: u * r}
    if name in ("linear-ode", "nl-ode"):
        return {"A": np.sin, "B": np.cos}
    return {}


@pytest.mark.parametrize("name", sorted(S.SCHEMES))
def test_samplers_land_on_the_zero_set(name):
    scheme = S.get_scheme(name, **scheme_kwargs(name))
    cfg = scheme.sampler(SplitMix64(1), 64)
    r = S.residuals(scheme, cfg)
    assert r.shape == (64, len(scheme))
    assert np.max(np.abs(r)) < 1e-11


def test_residuals_check_labels():
    with pytest.raises(ValueError):
        S.residuals(S.heat_scheme(), S.polar_probe(0.1))
    with pytest.raises(KeyError):
        S.get_scheme("nope")


def closed_form_exponential(m, n, h, tau, c, K, x0, t0):
    t = t0 + tau * m
    x = x0 + h * n + 2 * c * t
    return x, t, K * np.exp(-c * x + c * c * t)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.2), st.floats(0.002, 0.02), st.floats(-2, 2), st.floats(0.5, 3), st.floats(-1, 1))
def test_exponential_family_is_exact(h, tau, c, K, x0):
    sol = S.heat_exponential_solution(h, tau, c, K, x0, 1.0)
    grid = sol.grid(np.arange(6), np.arange(8))
    m, n = np.meshgrid(np.arange(6), np.arange(8), indexing="ij")
    assert np.allclose(grid.coords, np.stack(closed_form_exponential(m, n, h, tau, c, K, x0, 1.0), -1))
    r = S.residuals(S.heat_scheme(), build_stencils(grid, interior_bases(grid, S.HEAT_TEMPLATE), S.HEAT_TEMPLATE))
    scale = np.max(np.abs(grid.coords[..., 2])) + 1
    assert np.max(np.abs(r)) < 1e-11 * scale


def test_source_family_solves_heat_equation_in_the_continuum():
    # independent check: the fundamental solution satisfies u_t = u_xx
    x, t, e = 0.37, 1.3, 1e-4
    u = lambda x, t: np.exp(-x * x / (4 * t)) / np.sqrt(4 * np.pi * t)  # noqa: E731
    ut = (u(x, t + e) - u(x, t - e)) / (2 * e)
    uxx = (u(x + e, t) - 2 * u(x, t) + u(x - e, t)) / e**2
    assert abs(ut - uxx) < 1e-6
    pts = S.heat_source_solution(0.1, 0.01, 0.3, 1.3).sample(np.array(0), np.array(0))
    assert np.isclose(pts[2], u(pts[0], pts[1]))


def test_explicit_update_solves_first_and_mesh_residuals():
    rng = SplitMix64(2)
    cfg = S.heat_zero_set_sampler(rng, 40)
    x, t, u = cfg.unpack(ZERO)
    dxh, rhs = S.heat_explicit(x, cfg.coord("+", 0), cfg.coord("-", 0), u, cfg.coord("+", 2), cfg.coord("-", 2), cfg.coord(HAT, 1) - t)
    assert np.allclose(cfg.coord(HAT, 0) - x, dxh)
    assert np.all(rhs > 0)


def test_amplitude_refuses_large_steps():
    with pytest.raises(StepTooLarge):
        S.heat_amplitude(np.ones(3), np.zeros(3), np.array([0.5, -0.1, 1.0]), 0.5)


def test_hodograph_images_of_exact_solutions_match_hand_written_families():
    a = S.hodograph_solution(S.heat_exponential_solution(0.1, 0.01, 1.0, 2.0, 0.4, 1.0)).grid(np.arange(3), np.arange(4))
    b = S.nl_heat_exponential_solution(0.1, 0.01, 1.0, 2.0, 0.4, 1.0).grid(np.arange(3), np.arange(4))
    assert np.allclose(a.coords, b.coords, rtol=1e-14)
    a = S.hodograph_solution(S.heat_source_solution(0.1, 0.01, -0.2, 1.0)).grid(np.arange(3), np.arange(4))
    b = S.nl_heat_source_solution(0.1, 0.01, -0.2, 1.0).grid(np.arange(3), np.arange(4))
    assert np.allclose(a.coords, b.coords, rtol=1e-14)


def test_expanded_wave_residual_is_minus_four_times_invariant_form():
    xt = S.wave_scheme_xt(np.sin)
    cfg = xt.sampler(SplitMix64(3), 50)
    lin = S.wave_scheme_xt(np.sin).equations[0]
    perturbed = cfg.with_coords(cfg.coords + np.array([0.0, 0.0, 0.05]) * SplitMix64(4).uniform(-1, 1, cfg.coords.shape))
    assert np.allclose(S.wave_xt_expanded(np.sin)(perturbed), -4 * lin(perturbed), rtol=1e-10, atol=1e-10)


def test_cartesian_scheme_matches_direct_formulas():
    F = lambda u, r: u * u + r  # noqa: E731
    pushed = S.cartesian_laplace_scheme(F, 0.1, 0.2)
    direct = S.cartesian_laplace_direct(F, 0.1, 0.2)
    cfg = pushforward_stencil(polar(), S.polar_laplace_scheme(F, 0.1, 0.2).sampler(SplitMix64(5), 50), S.CARTESIAN_TEMPLATE)
    noisy = cfg.with_coords(cfg.coords * (1 + 0.01 * SplitMix64(6).uniform(-1, 1, cfg.coords.shape)))
    assert np.allclose(S.residuals(pushed, noisy), direct(noisy), atol=1e-10)


def test_ode_step_agrees_with_closed_form():
    scheme = S.linear_ode_scheme(np.sin, np.cos, 0.1)
    sol = S.linear_ode_solution(np.sin, np.cos, 0.1, c=0.3, x0=0.2)
    pts = sol.sample(np.arange(10))
    for k in range(9):
        assert np.allclose(scheme.step(*pts[k]), pts[k + 1], rtol=1e-13)


ORDERS = [
    ("heat", lambda: S.heat_scheme(), S.heat_probe, 1.0),
    ("nl-heat", lambda: S.nonlinear_heat_scheme(), S.nl_heat_probe, 1.0),
    ("wave-yz", lambda: S.wave_scheme_yz(lambda u: u), S.wave_probe_yz, 1.0),
    ("polar", lambda: S.polar_laplace_scheme(4.0), S.polar_probe, 1.0),
    ("wave-standard", lambda: S.wave_standard_scheme(lambda u: u), S.wave_standard_probe, 2.0),
    ("laplace-5pt", lambda: S.laplace_5pt_scheme(4.0), S.laplace_probe, 2.0),
]


@pytest.mark.parametrize("name,make,probe,expected", ORDERS, ids=[o[0] for o in ORDERS])
def test_consistency_orders(name, make, probe, expected):
    est = S.consistency_order(make(), probe, (0.04, 0.02, 0.01, 0.005))
    assert not est.exact
    assert abs(est.order - expected) < 0.2


def test_ftcs_is_first_order_in_time():
    est = S.consistency_order(S.heat_ftcs_scheme(), S.heat_ftcs_probe, (4e-4, 1e-4, 2.5e-5, 6.25e-6))
    assert abs(est.order - 1.0) < 0.2


def test_exact_family_is_flagged_exact():
    def probe(h):
        grid = S.heat_exponential_solution(h=h, tau=h * h).grid(np.arange(2), np.arange(3))
        return build_stencils(grid, [(0, 1)], S.HEAT_TEMPLATE).take(0)

    est = S.consistency_order(S.heat_scheme(), probe, (0.04, 0.02, 0.01))
    assert est.exact and est.order is None and str(est) == "exact"


def test_standard_schemes_break_the_symmetries_they_ignore():
    ftcs = S.heat_ftcs_scheme()
    rep = check_weak_invariance(ftcs.equations[0], ftcs.algebra, ftcs.sampler, 50, 1e-6, SplitMix64(7))
    assert not rep.passed
    five = S.laplace_5pt_scheme(None)
    rep = check_weak_invariance(five.equations[1], five.algebra, five.sampler, 50, 1e-6, SplitMix64(8))
    assert not rep.passed


def test_scheme_metadata():
    s = S.get_scheme("wave-xt", F=np.sin, eps=0.2, delta=0.3)
    assert s.params["eps"] == 0.2 and s.p == 2 and s.q == 1
    assert s.invariant and not S.get_scheme("heat-ftcs").invariant
    cfg = s.sampler(SplitMix64(9), 3)
    assert np.array_equal(s(cfg), S.residuals(s, cfg))
    assert isinstance(cfg, StencilConfig)
