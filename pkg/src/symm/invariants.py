"""
Invariant families: symmetry algebras, stencil templates and hand-coded
difference invariants for the linear ODE, the heat equation and its
hodograph image, and the wave equation in characteristic and physical
variables.

Every invariant is a plain function of a (possibly batched)
:class:`~symm.stencil.StencilConfig`. Each family also ships a sampler that
draws generic configurations on its declared invariant manifold; the
verification routines of :mod:`symm.lie` consume those samplers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainViolation
from .lie import SymmetryAlgebra, VectorField
from .stencil import CHECK, HAT, HAT_PLUS, MINUS, PLUS, ZERO, StencilConfig, template_1d, template_2d
from .transforms import characteristic, pushforward_stencil


@dataclass(frozen=True)
class InvariantFamily:
    name: str
    algebra: SymmetryAlgebra
    template: object
    members: dict
    manifold: tuple = ()
    sampler: Callable | None = None
    mu: int | None = None
    manifold_dim: int | None = None
    extras: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.members.items())

    def __len__(self):
        return len(self.members)

    def evaluate(self, config: StencilConfig) -> np.ndarray:
        return np.stack([f(config) for f in self.members.values()], axis=-1)


def _named(name):
    def deco(fn):
        fn.__name__ = name
        return fn

    return deco


def _require_positive(*arrays, what="value"):
    for a in arrays:
        if np.any(np.asarray(a) <= 0):
            raise DomainViolation(f"{what} must be positive")


def _require_nonzero(*arrays, what="step"):
    for a in arrays:
        if np.any(np.asarray(a) == 0):
            raise DomainViolation(f"{what} must be nonzero")


def _fn(f):
    """Vectorised scalar function; plain numbers become constants."""
    if callable(f):
        return f
    c = float(f)
    return lambda x: np.full(np.shape(x), c)


# ------------------------------------------------------------ linear ODE

LINEAR_ODE_TEMPLATE = template_1d((ZERO, PLUS), names=("x", "u"))
NONLINEAR_ODE_TEMPLATE = template_1d((ZERO, PLUS), names=("y", "v"))


def linear_ode_algebra(A=0.0, B=0.0) -> SymmetryAlgebra:
    """``V1 = e^{A(x)} ∂u``, ``V2 = (u - B(x) e^{A(x)}) ∂u`` for ``u' = A'u + B'e^A``."""
    A, B = _fn(A), _fn(B)
    v1 = VectorField.from_components("V1", 1, 1, lambda x, u: (0.0, np.exp(A(x))))
    v2 = VectorField.from_components("V2", 1, 1, lambda x, u: (0.0, u - B(x) * np.exp(A(x))))
    return SymmetryAlgebra((v1, v2), 1, 1, "linear-ode")


def nonlinear_ode_algebra(A=0.0, B=0.0) -> SymmetryAlgebra:
    """Hodograph image: ``V1 = e^{A(v)} ∂y``, ``V2 = (y - B(v) e^{A(v)}) ∂y``."""
    A, B = _fn(A), _fn(B)
    v1 = VectorField.from_components("V1", 1, 1, lambda y, v: (np.exp(A(v)), 0.0))
    v2 = VectorField.from_components("V2", 1, 1, lambda y, v: (y - B(v) * np.exp(A(v)), 0.0))
    return SymmetryAlgebra((v1, v2), 1, 1, "nonlinear-ode")


def linear_ode_manifold(A=0.0, B=0.0):
    A, B = _fn(A), _fn(B)

    @_named("E_manifold")
    def E(c):
        x, u = c.unpack(ZERO)
        xp, up = c.unpack(PLUS)
        return up * np.exp(-A(xp)) - u * np.exp(-A(x)) - B(xp) + B(x)

    return E


def linear_ode_invariants(A=0.0, B=0.0) -> InvariantFamily:
    """Invariants ``I1 = x``, ``I2 = x_+`` and the weakly invariant manifold."""
    A, B = _fn(A), _fn(B)

    @_named("I1")
    def I1(c):
        return c.coord(ZERO, 0)

    @_named("I2")
    def I2(c):
        return c.coord(PLUS, 0)

    E = linear_ode_manifold(A, B)

    def sampler(rng, n):
        x = rng.uniform(-1.0, 1.0, n)
        xp = x + rng.uniform(0.1, 0.5, n)
        u = rng.uniform(0.5, 2.0, n)
        up = np.exp(A(xp)) * (u * np.exp(-A(x)) + B(xp) - B(x))
        return StencilConfig.from_points(LINEAR_ODE_TEMPLATE, {ZERO: np.stack([x, u], -1), PLUS: np.stack([xp, up], -1)})

    def generic(rng, n):
        x = rng.uniform(-1.0, 1.0, n)
        xp = x + rng.uniform(0.1, 0.5, n)
        u = rng.uniform(0.5, 2.0, n)
        up = rng.uniform(0.5, 2.0, n)
        return StencilConfig.from_points(LINEAR_ODE_TEMPLATE, {ZERO: np.stack([x, u], -1), PLUS: np.stack([xp, up], -1)})

    return InvariantFamily(
        "linear-ode",
        linear_ode_algebra(A, B),
        LINEAR_ODE_TEMPLATE,
        {"I1": I1, "I2": I2},
        (E,),
        generic,
        mu=2,
        extras={"manifold_sampler": sampler},
    )


# ------------------------------------------------------------------ heat

HEAT_TEMPLATE = template_2d((ZERO, PLUS, MINUS, HAT), names=("x", "t", "u"), ties=((PLUS, 1, ZERO), (MINUS, 1, ZERO)))
NL_HEAT_TEMPLATE = template_2d((ZERO, PLUS, MINUS, HAT), names=("y", "t", "v"), ties=((PLUS, 1, ZERO), (MINUS, 1, ZERO)))


def heat_algebra() -> SymmetryAlgebra:
    """Six-dimensional point symmetry algebra of ``u_t = u_xx`` on ``(x, t, u)``."""
    f = VectorField.from_components
    return SymmetryAlgebra(
        (
            f("V1", 2, 1, lambda x, t, u: (1.0, 0.0, 0.0)),
            f("V2", 2, 1, lambda x, t, u: (0.0, 1.0, 0.0)),
            f("V3", 2, 1, lambda x, t, u: (0.0, 0.0, u)),
            f("V4", 2, 1, lambda x, t, u: (x, 2 * t, 0.0)),
            f("V5", 2, 1, lambda x, t, u: (2 * t, 0.0, -x * u)),
            f("V6", 2, 1, lambda x, t, u: (4 * t * x, 4 * t * t, -(x * x + 2 * t) * u)),
        ),
        2,
        1,
        "heat",
    )


def nonlinear_heat_algebra() -> SymmetryAlgebra:
    """Algebra of ``v_t = v_yy / v_y^2`` on ``(y, t, v)``."""
    f = VectorField.from_components
    return SymmetryAlgebra(
        (
            f("V1", 2, 1, lambda y, t, v: (0.0, 0.0, 1.0)),
            f("V2", 2, 1, lambda y, t, v: (0.0, 1.0, 0.0)),
            f("V3", 2, 1, lambda y, t, v: (y, 0.0, 0.0)),
            f("V4", 2, 1, lambda y, t, v: (0.0, 2 * t, v)),
            f("V5", 2, 1, lambda y, t, v: (-v * y, 0.0, 2 * t)),
            f("V6", 2, 1, lambda y, t, v: (-(v * v + 2 * t) * y, 4 * t * t, 4 * t * v)),
        ),
        2,
        1,
        "nl-heat",
    )


def heat_parts(c: StencilConfig) -> dict:
    """Steps and log-ratios of a heat stencil, with domain guards."""
    x, t, u = c.unpack(ZERO)
    xp, _, up = c.unpack(PLUS)
    xm, _, um = c.unpack(MINUS)
    xh, th, uh = c.unpack(HAT)
    _require_positive(u, up, um, uh, what="u")
    dxp, dxm, dth = xp - x, x - xm, th - t
    _require_nonzero(dxp, dxm, dth, dxp + dxm)
    return dict(u=u, uh=uh, dxp=dxp, dxm=dxm, dxh=xh - x, dth=dth, lp=np.log(up / u), lm=np.log(um / u))


@_named("I1")
def heat_I1(c):
    s = heat_parts(c)
    return s["dxp"] / s["dxm"]


@_named("I2")
def heat_I2(c):
    s = heat_parts(c)
    return s["dxp"] ** 2 / s["dth"] * (s["u"] / s["uh"]) ** 2 * np.exp(-s["dxh"] ** 2 / (2 * s["dth"]))


@_named("I3")
def heat_I3(c):
    s = heat_parts(c)
    dxp, dxm = s["dxp"], s["dxm"]
    return dxp**2 / (4 * s["dth"]) - dxp**2 / (dxp + dxm) * (s["lp"] / dxp + s["lm"] / dxm)


@_named("I4")
def heat_I4(c):
    s = heat_parts(c)
    dxp, dxm = s["dxp"], s["dxm"]
    return dxp * s["dxh"] / s["dth"] + 2 * dxp / (dxp + dxm) * (dxm / dxp * s["lp"] - dxp / dxm * s["lm"])


@_named("flat_time")
def flat_time(c):
    """``Δt_+ = t_+ - t``, the flat-layer manifold."""
    return c.coord(PLUS, 1) - c.coord(ZERO, 1)


def heat_sampler(rng, n):
    """Generic flat-time heat stencils with positive u."""
    x = rng.uniform(-1.0, 1.0, n)
    t = rng.uniform(0.2, 0.5, n)
    xp = x + rng.uniform(0.2, 0.5, n)
    xm = x - rng.uniform(0.2, 0.5, n)
    u = rng.uniform(0.5, 2.0, n)
    up = u * np.exp(rng.uniform(-0.3, 0.3, n))
    um = u * np.exp(rng.uniform(-0.3, 0.3, n))
    th = t + rng.uniform(0.05, 0.15, n)
    xh = x + rng.uniform(-0.3, 0.3, n)
    uh = u * np.exp(rng.uniform(-0.3, 0.3, n))
    pts = {
        ZERO: np.stack([x, t, u], -1),
        PLUS: np.stack([xp, t, up], -1),
        MINUS: np.stack([xm, t, um], -1),
        HAT: np.stack([xh, th, uh], -1),
    }
    return StencilConfig.from_points(HEAT_TEMPLATE, pts)


def heat_invariants() -> InvariantFamily:
    return InvariantFamily(
        "heat",
        heat_algebra(),
        HEAT_TEMPLATE,
        {"I1": heat_I1, "I2": heat_I2, "I3": heat_I3, "I4": heat_I4},
        (flat_time,),
        heat_sampler,
        mu=4,
    )


def nl_heat_parts(c: StencilConfig) -> dict:
    y, t, v = c.unpack(ZERO)
    yp, _, vp = c.unpack(PLUS)
    ym, _, vm = c.unpack(MINUS)
    yh, th, vh = c.unpack(HAT)
    _require_positive(y, yp, ym, yh, what="y")
    dvp, dvm, dth = vp - v, v - vm, th - t
    _require_nonzero(dvp, dvm, dth, vp - vm, what="v step")
    return dict(y=y, yh=yh, v=v, vp=vp, vm=vm, vh=vh, dth=dth, lp=np.log(yp / y), lm=np.log(ym / y))


@_named("I1~")
def nl_heat_I1(c):
    s = nl_heat_parts(c)
    return (s["vp"] - s["v"]) / (s["v"] - s["vm"])


@_named("I2~")
def nl_heat_I2(c):
    s = nl_heat_parts(c)
    return (s["vp"] - s["v"]) ** 2 / s["dth"] * (s["y"] / s["yh"]) ** 2 * np.exp(-((s["vh"] - s["v"]) ** 2) / (2 * s["dth"]))


@_named("I3~")
def nl_heat_I3(c):
    s = nl_heat_parts(c)
    v, vp, vm = s["v"], s["vp"], s["vm"]
    return (vp - v) ** 2 / (4 * s["dth"]) - (vp - v) ** 2 / (vp - vm) * (s["lp"] / (vp - v) + s["lm"] / (v - vm))


def _nl_I4(c, denominator):
    s = nl_heat_parts(c)
    v, vp, vm = s["v"], s["vp"], s["vm"]
    bracket = (v - vm) / (vp - v) * s["lp"] - (vp - v) / (v - vm) * s["lm"]
    return (vp - v) * (s["vh"] - v) / s["dth"] + 2 * (vp - v) / denominator(v, vp, vm) * bracket


@_named("I4~")
def nl_heat_I4(c):
    """Image of I4: the sum of steps ``Δx_+ + Δx_-`` becomes ``v_+ - v_-``."""
    return _nl_I4(c, lambda v, vp, vm: vp - vm)


@_named("I4~printed")
def nl_heat_I4_printed(c):
    """Variant with denominator ``v_+ + v_-``; not an invariant (kept for comparison)."""
    return _nl_I4(c, lambda v, vp, vm: vp + vm)


def nl_heat_sampler(rng, n):
    """Generic flat-time stencils of the nonlinear heat equation (y > 0, v increasing in n)."""
    v = rng.uniform(-1.0, 1.0, n)
    t = rng.uniform(0.2, 0.5, n)
    vp = v + rng.uniform(0.2, 0.5, n)
    vm = v - rng.uniform(0.2, 0.5, n)
    y = rng.uniform(0.5, 2.0, n)
    yp = y * np.exp(rng.uniform(-0.3, 0.3, n))
    ym = y * np.exp(rng.uniform(-0.3, 0.3, n))
    th = t + rng.uniform(0.05, 0.15, n)
    vh = v + rng.uniform(-0.3, 0.3, n)
    yh = y * np.exp(rng.uniform(-0.3, 0.3, n))
    pts = {
        ZERO: np.stack([y, t, v], -1),
        PLUS: np.stack([yp, t, vp], -1),
        MINUS: np.stack([ym, t, vm], -1),
        HAT: np.stack([yh, th, vh], -1),
    }
    return StencilConfig.from_points(NL_HEAT_TEMPLATE, pts)


def nonlinear_heat_invariants() -> InvariantFamily:
    return InvariantFamily(
        "nl-heat",
        nonlinear_heat_algebra(),
        NL_HEAT_TEMPLATE,
        {"I1~": nl_heat_I1, "I2~": nl_heat_I2, "I3~": nl_heat_I3, "I4~": nl_heat_I4},
        (flat_time,),
        nl_heat_sampler,
        mu=4,
        extras={"I4~printed": nl_heat_I4_printed},
    )


# ------------------------------------------------------------------ wave

WAVE_LABELS = (HAT, ZERO, CHECK, PLUS, MINUS, HAT_PLUS)
# y is constant along m, z along n; hat+ shares the z of hat
WAVE_YZ_TEMPLATE = template_2d(
    WAVE_LABELS,
    names=("y", "z", "u"),
    ties=((HAT, 0, ZERO), (CHECK, 0, ZERO), (PLUS, 1, ZERO), (MINUS, 1, ZERO), (HAT_PLUS, 1, HAT)),
)
WAVE_XT_TEMPLATE = template_2d(WAVE_LABELS, names=("x", "t", "u"))


def wave_algebra_yz() -> SymmetryAlgebra:
    f = VectorField.from_components
    return SymmetryAlgebra(
        (
            f("V1~", 2, 1, lambda y, z, u: (y, -z, 0.0)),
            f("V2~", 2, 1, lambda y, z, u: (1.0, 0.0, 0.0)),
            f("V3~", 2, 1, lambda y, z, u: (0.0, 1.0, 0.0)),
        ),
        2,
        1,
        "wave-yz",
    )


def wave_algebra_xt() -> SymmetryAlgebra:
    """Boost ``t∂x + x∂t`` and the two translations."""
    f = VectorField.from_components
    return SymmetryAlgebra(
        (
            f("V1", 2, 1, lambda x, t, u: (t, x, 0.0)),
            f("V2", 2, 1, lambda x, t, u: (1.0, 0.0, 0.0)),
            f("V3", 2, 1, lambda x, t, u: (0.0, 1.0, 0.0)),
        ),
        2,
        1,
        "wave-xt",
    )


def _u_member(label):
    @_named(f"u[{label}]")
    def member(c):
        return c.coord(label, 2)

    return member


def _wave_yz_steps(c):
    dyp = c.coord(PLUS, 0) - c.coord(ZERO, 0)
    dym = c.coord(ZERO, 0) - c.coord(MINUS, 0)
    dyhp = c.coord(HAT_PLUS, 0) - c.coord(HAT, 0)
    dzh = c.coord(HAT, 1) - c.coord(ZERO, 1)
    dzc = c.coord(ZERO, 1) - c.coord(CHECK, 1)
    _require_nonzero(dym, dyp, dzc)
    return dyp, dym, dyhp, dzh, dzc


@_named("I7~")
def wave_I7(c):
    dyp, dym, *_ = _wave_yz_steps(c)
    return dyp / dym


@_named("I8~")
def wave_I8(c):
    dyp, _, dyhp, _, _ = _wave_yz_steps(c)
    return dyhp / dyp


@_named("I9~")
def wave_I9(c):
    *_, dzh, dzc = _wave_yz_steps(c)
    return dzh / dzc


@_named("I10~")
def wave_I10(c):
    dyp, _, _, dzh, _ = _wave_yz_steps(c)
    return dyp * dzh


def wave_yz_sampler(rng, n):
    """Generic stencils on the orthogonal characteristic lattice."""
    y = rng.uniform(-1.0, 1.0, n)
    z = rng.uniform(-1.0, 1.0, n)
    yp = y + rng.uniform(0.2, 0.6, n)
    ym = y - rng.uniform(0.2, 0.6, n)
    zh = z - rng.uniform(0.2, 0.6, n)
    zc = z + rng.uniform(0.2, 0.6, n)
    yhp = y + rng.uniform(0.2, 0.6, n)
    u = rng.uniform(-1.0, 1.0, (6, n))
    pts = {
        HAT: np.stack([y, zh, u[0]], -1),
        ZERO: np.stack([y, z, u[1]], -1),
        CHECK: np.stack([y, zc, u[2]], -1),
        PLUS: np.stack([yp, z, u[3]], -1),
        MINUS: np.stack([ym, z, u[4]], -1),
        HAT_PLUS: np.stack([yhp, zh, u[5]], -1),
    }
    return StencilConfig.from_points(WAVE_YZ_TEMPLATE, pts)


def wave_invariants() -> InvariantFamily:
    members = {f"I{k + 1}~": _u_member(lab) for k, lab in enumerate((ZERO, PLUS, MINUS, CHECK, HAT, HAT_PLUS))}
    members.update({"I7~": wave_I7, "I8~": wave_I8, "I9~": wave_I9, "I10~": wave_I10})
    return InvariantFamily("wave-yz", wave_algebra_yz(), WAVE_YZ_TEMPLATE, members, (), wave_yz_sampler, mu=10)


def _wave_xt_steps(c):
    dxp = c.coord(PLUS, 0) - c.coord(ZERO, 0)
    dxm = c.coord(ZERO, 0) - c.coord(MINUS, 0)
    dxhp = c.coord(HAT_PLUS, 0) - c.coord(HAT, 0)
    dth = c.coord(HAT, 1) - c.coord(ZERO, 1)
    dtc = c.coord(ZERO, 1) - c.coord(CHECK, 1)
    _require_nonzero(dxm, dxp, dtc)
    return dxp, dxm, dxhp, dth, dtc


@_named("I7")
def wave_xt_I7(c):
    dxp, dxm, *_ = _wave_xt_steps(c)
    return dxp / dxm


@_named("I8")
def wave_xt_I8(c):
    dxp, _, dxhp, _, _ = _wave_xt_steps(c)
    return dxhp / dxp


@_named("I9")
def wave_xt_I9(c):
    *_, dth, dtc = _wave_xt_steps(c)
    return dth / dtc


@_named("I10")
def wave_xt_I10(c):
    dxp, _, _, dth, _ = _wave_xt_steps(c)
    return -4 * dxp * dth


def wave_xt_sampler(rng, n):
    """Rotated-lattice stencils: the characteristic lattice mapped back to ``(x, t)``."""
    return pushforward_stencil(characteristic().inverted(), wave_yz_sampler(rng, n), WAVE_XT_TEMPLATE)


def wave_invariants_xt() -> InvariantFamily:
    members = {f"I{k + 1}": _u_member(lab) for k, lab in enumerate((ZERO, PLUS, MINUS, CHECK, HAT, HAT_PLUS))}
    members.update({"I7": wave_xt_I7, "I8": wave_xt_I8, "I9": wave_xt_I9, "I10": wave_xt_I10})
    return InvariantFamily(
        "wave-xt", wave_algebra_xt(), WAVE_XT_TEMPLATE, members, (), wave_xt_sampler, mu=10, manifold_dim=13
    )


FAMILIES = {
    "linear-ode": linear_ode_invariants,
    "heat": heat_invariants,
    "nl-heat": nonlinear_heat_invariants,
    "wave-yz": wave_invariants,
    "wave-xt": wave_invariants_xt,
}


def get_family(name: str, **params) -> InvariantFamily:
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise KeyError(f"unknown invariant family {name!r}; choose from {sorted(FAMILIES)}") from None
    return factory(**params)
