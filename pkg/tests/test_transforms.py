import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from symm import schemes as S
from symm.errors import OutsideChart
from symm.invariants import heat_algebra, heat_invariants, nonlinear_heat_algebra, wave_algebra_xt, wave_algebra_yz
from symm.lie import VectorField, check_strong_invariance
from symm.rng import SplitMix64
from symm.transforms import (
    apply,
    apply_inverse,
    characteristic,
    check_commuting_diagram,
    conjugate_algebra,
    conjugate_field,
    conjugation_defect,
    get_transform,
    hodograph,
    identity,
    polar,
    pushforward_invariant,
    pushforward_scheme,
    pushforward_stencil,
    wrap_angle,
)

points3 = arrays(float, (5, 3), elements=st.floats(-3, 3, allow_nan=False))


@settings(max_examples=40, deadline=None)
@given(points3)
def test_round_trips(pts):
    for psi in (identity(2), hodograph(2), characteristic()):
        assert np.allclose(psi.inverse(psi.forward(pts)), pts, atol=1e-12)
    assert np.array_equal(hodograph(2).forward(hodograph(2).forward(pts)), pts)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (6,), elements=st.floats(-50, 50, allow_nan=False)))
def test_wrap_angle_range_and_congruence(a):
    w = wrap_angle(a)
    assert np.all(w > -np.pi) and np.all(w <= np.pi)
    k = (a - w) / (2 * np.pi)
    assert np.allclose(k, np.round(k), atol=1e-9)


def test_polar_round_trip_and_chart_guard():
    r = np.array([0.5, 1.0, 2.0])
    th = np.array([3.0, -1.0, 6.0])
    pts = np.stack([r, th, r * 0 + 1], -1)
    back = apply_inverse(polar(), apply(polar(), pts))
    assert np.allclose(back[:, 0], r)
    assert np.allclose(wrap_angle(back[:, 1] - th), 0.0, atol=1e-12)
    with pytest.raises(OutsideChart):
        apply(polar(), [[-1.0, 0.0, 0.0]])
    with pytest.raises(OutsideChart):
        apply_inverse(polar(), [[0.0, 0.0, 1.0]])


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0.5, 2, 4), rng.uniform(-3, 3, 4), rng.uniform(-1, 1, 4)])
    for psi in (polar(), characteristic(), hodograph(2)):
        h = 1e-6
        fd = np.stack([(psi.forward(pts + h * e) - psi.forward(pts - h * e)) / (2 * h) for e in np.eye(3)], -1)
        assert np.allclose(psi.jacobian(pts), fd, atol=1e-8)
        img = psi.forward(pts)
        assert np.allclose(psi.inverse_jacobian(img) @ psi.jacobian(pts), np.eye(3), atol=1e-12)


def test_hodograph_conjugates_heat_algebra_to_nonlinear_algebra():
    pts = np.random.default_rng(1).uniform(0.2, 2.0, (10, 3))
    pushed = conjugate_algebra(hodograph(2), heat_algebra())
    for a, b in zip(pushed, nonlinear_heat_algebra()):
        assert np.allclose(a(pts), b(pts), atol=1e-14), b.name


def test_characteristic_conjugates_boost_to_scaling():
    pts = np.random.default_rng(2).uniform(-1, 1, (10, 3))
    pushed = conjugate_field(characteristic(), wave_algebra_xt()[0])
    assert np.allclose(pushed(pts), wave_algebra_yz()[0](pts), atol=1e-14)


def test_conjugation_commutes_with_flows():
    rot = VectorField.from_components("rot", 2, 1, lambda r, th, u: (0.0, 1.0, 0.0))
    pts = np.array([[1.2, 0.3, 0.5], [0.7, -2.0, 1.0]])
    assert conjugation_defect(polar(), rot, pts, 0.8) < 1e-11


def test_fd_jacobian_fallback_warns():
    psi = characteristic()
    bare = type(psi)(psi.name, 2, 1, psi.forward, psi.inverse)
    with pytest.warns(UserWarning):
        v = conjugate_field(bare, wave_algebra_xt()[0])
    pts = np.random.default_rng(3).uniform(-1, 1, (4, 3))
    assert np.allclose(v(pts), wave_algebra_yz()[0](pts), atol=1e-8)


def test_pushforward_invariant_is_invariant_under_conjugated_algebra():
    fam = heat_invariants()
    psi = hodograph(2)
    alg = conjugate_algebra(psi, fam.algebra)

    def sampler(rng, n):
        return pushforward_stencil(psi, fam.sampler(rng, n))

    for name, I in fam:
        rep = check_strong_invariance(pushforward_invariant(psi, I, fam.template), alg, sampler, 50, 1e-6, SplitMix64(4), name)
        assert rep.passed, str(rep)


def test_pushforward_scheme_keeps_zero_set_and_renames():
    pushed = pushforward_scheme(hodograph(2), S.heat_scheme())
    assert pushed.template.names == ("y", "t", "v")
    assert pushed.provenance[-1] == "hodograph"
    cfg = pushed.sampler(SplitMix64(5), 30)
    assert np.max(np.abs(S.residuals(pushed, cfg))) < 1e-12


def test_commuting_diagram_report():
    rep = check_commuting_diagram(hodograph(2), S.heat_scheme(), S.heat_probe, (0.04, 0.02, 0.01), S.nonlinear_heat_scheme(), S.nl_heat_probe)
    d = rep.to_dict()
    assert rep.passed and d["pass"]
    assert d["max_functorial_gap"] < 1e-12


def test_registry():
    assert get_transform("polar").name == "polar"
    assert get_transform("hodograph", 1).p == 1
    with pytest.raises(KeyError):
        get_transform("nope")
