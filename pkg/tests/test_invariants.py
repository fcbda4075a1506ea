import numpy as np
import pytest

from symm.errors import DomainViolation
from symm.invariants import (
    FAMILIES,
    HEAT_TEMPLATE,
    get_family,
    heat_invariants,
    heat_sampler,
    nonlinear_heat_invariants,
    wave_invariants,
    wave_invariants_xt,
    wave_xt_sampler,
)
from symm.lie import check_finite_invariance, check_strong_invariance, gradient, invariant_count, numerical_rank
from symm.rng import SplitMix64
from symm.stencil import ZERO
from symm.transforms import characteristic, hodograph, pushforward_stencil


@pytest.mark.parametrize("fid", sorted(FAMILIES))
def test_members_are_strong_invariants(fid):
    fam = get_family(fid)
    for name, f in fam:
        rep = check_strong_invariance(f, fam.algebra, fam.sampler, 100, 1e-6, SplitMix64(1), name)
        assert rep.passed, str(rep)


@pytest.mark.parametrize("fid", sorted(FAMILIES))
def test_invariant_count_matches_member_count(fid):
    fam = get_family(fid)
    mu = invariant_count(fam.algebra, fam.template, fam.sampler, 60, SplitMix64(2), fam.manifold_dim)
    assert mu == fam.mu == len(fam)


@pytest.mark.parametrize("fid", sorted(FAMILIES))
def test_members_are_functionally_independent(fid):
    fam = get_family(fid)
    cfg = fam.sampler(SplitMix64(3), 20)
    free = fam.template.free_slots()
    jac = np.stack([gradient(f, cfg)[:, free] for _, f in fam], axis=-2)
    assert np.all(numerical_rank(jac, 1e-6) == len(fam))


def test_heat_invariants_survive_finite_projective_flows():
    fam = heat_invariants()
    for name, f in fam:
        rep = check_finite_invariance(f, fam.algebra, fam.sampler, (-0.1, 0.1), 20, 1e-8, SplitMix64(4), name)
        assert rep.passed, str(rep)


def test_hodograph_maps_heat_invariants_to_nonlinear_ones():
    cfg = heat_sampler(SplitMix64(5), 50)
    image = pushforward_stencil(hodograph(2), cfg)
    for (_, I), (_, J) in zip(heat_invariants(), nonlinear_heat_invariants()):
        assert np.allclose(I(cfg), J(image), rtol=1e-12, atol=1e-12)


def test_printed_nonlinear_I4_variant_is_not_invariant():
    fam = nonlinear_heat_invariants()
    printed = fam.extras["I4~printed"]
    rep = check_strong_invariance(printed, fam.algebra, fam.sampler, 50, 1e-6, SplitMix64(6))
    assert not rep.passed
    # only the v-translation breaks it
    broken = [r.generator for r in rep.results if not r.passed]
    assert "V1" in broken


def test_wave_xt_members_are_images_of_yz_members():
    cfg = wave_xt_sampler(SplitMix64(7), 40)
    yz = pushforward_stencil(characteristic(), cfg, wave_invariants().template)
    for (_, I), (_, J) in zip(wave_invariants(), wave_invariants_xt()):
        assert np.allclose(I(yz), J(cfg), rtol=1e-12, atol=1e-13)


def test_linear_ode_manifold_holds_on_manifold_samples():
    fam = get_family("linear-ode", A=np.sin, B=np.cos)
    cfg = fam.extras["manifold_sampler"](SplitMix64(8), 30)
    assert np.max(np.abs(fam.manifold[0](cfg))) < 1e-14
    assert fam.evaluate(cfg).shape == (30, 2)


def test_domain_guards():
    cfg = heat_sampler(SplitMix64(9), 3).replace(ZERO, 2, -1.0)
    with pytest.raises(DomainViolation):
        heat_invariants().members["I2"](cfg)
    with pytest.raises(KeyError):
        get_family("nope")
    assert HEAT_TEMPLATE.free_dim == 10
