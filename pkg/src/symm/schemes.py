"""
Difference schemes as ordered residual lists over a stencil template.

A :class:`Scheme` holds ``q+p`` residual functions (the first ``n_de``
approximate the differential equation, the rest fix the mesh), the
symmetry algebra it is meant to respect, a sampler that draws stencils on
its zero set and, optionally, a normalised residual whose value on a
smooth solution tends to zero with the steps (used to measure the order of
consistency).

Residual normalisations follow the explicit form of each scheme: the heat
scheme's first residual is ``(u/û)^2 exp(-Δx̂^2/(2Δt̂)) - RHS`` and its mesh
residual is ``Δx̂ - RHS``; the images under point transformations keep the
same normalisation so that pushed and hand-coded residuals agree to
rounding.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainViolation, StepTooLarge
from .invariants import (
    HEAT_TEMPLATE,
    LINEAR_ODE_TEMPLATE,
    NL_HEAT_TEMPLATE,
    NONLINEAR_ODE_TEMPLATE,
    WAVE_XT_TEMPLATE,
    WAVE_YZ_TEMPLATE,
    _fn,
    _named,
    _require_nonzero,
    _require_positive,
    heat_algebra,
    heat_sampler,
    linear_ode_algebra,
    nl_heat_sampler,
    nonlinear_heat_algebra,
    nonlinear_ode_algebra,
    wave_algebra_xt,
    wave_algebra_yz,
)
from .lie import SymmetryAlgebra, VectorField
from .stencil import CHECK, HAT, HAT_PLUS, MINUS, PLUS, ZERO, StencilConfig, template_2d
from .transforms import (
    ExactSolution,
    characteristic,
    hodograph,
    polar,
    pushforward_scheme,
    pushforward_solution,
    pushforward_stencil,
    wrap_angle,
)


@dataclass(frozen=True)
class Scheme:
    """A difference scheme.

    Attributes
    ----------
    equations : tuple of callables
        Residuals, each mapping a StencilConfig to an array over its batch.
    algebra : SymmetryAlgebra or None
    n_de : int
        How many leading residuals approximate the differential equation.
    sampler : callable, optional
        ``sampler(rng, n)`` drawing stencils on which every residual vanishes.
    continuum_residual : callable, optional
        Normalised residual tending to the differential equation's residual.
    step : callable, optional
        Closed-form update for two-point ODE schemes mapping one point to the
        next, both in the scheme's chart order.
    """

    name: str
    template: object
    equations: tuple
    algebra: SymmetryAlgebra | None = None
    n_de: int = 1
    sampler: Callable | None = None
    continuum_residual: Callable | None = None
    target: str = ""
    params: dict = field(default_factory=dict)
    invariant: bool = True
    update: str = ""
    step: Callable | None = None
    provenance: tuple = ()

    @property
    def p(self) -> int:
        return self.template.p

    @property
    def q(self) -> int:
        return self.template.q

    def __len__(self):
        return len(self.equations)

    def __call__(self, config):
        return residuals(self, config)


def residuals(scheme: Scheme, config: StencilConfig) -> np.ndarray:
    """Stack the residuals of ``scheme`` on the last axis."""
    if config.template.labels != scheme.template.labels:
        raise ValueError(f"{scheme.name} expects stencil labels {scheme.template.labels}")
    return np.stack([np.asarray(E(config), dtype=float) for E in scheme.equations], axis=-1)


def _collect(draw, n, rng, max_rounds=50):
    """Draw batches from ``draw(rng, k) -> (config, ok)`` until ``n`` accepted."""
    parts, have = [], 0
    for _ in range(max_rounds):
        cfg, ok = draw(rng, max(2 * (n - have), 8))
        parts.append(cfg.coords[ok])
        have += int(np.sum(ok))
        if have >= n:
            break
    else:
        raise RuntimeError("sampler acceptance rate too low")
    return StencilConfig(cfg.template, np.concatenate(parts)[:n])


# ----------------------------------------------------------------- ODE pair


def linear_ode_scheme(A=0.0, B=0.0, eps: float = 0.1) -> Scheme:
    """Exact scheme for ``u' = A'(x) u + B'(x) e^{A(x)}`` on a uniform mesh."""
    Af, Bf = _fn(A), _fn(B)

    @_named("manifold")
    def E0(c):
        x, u = c.unpack(ZERO)
        xp, up = c.unpack(PLUS)
        return up * np.exp(-Af(xp)) - u * np.exp(-Af(x)) - Bf(xp) + Bf(x)

    @_named("mesh")
    def E1(c):
        return c.coord(PLUS, 0) - c.coord(ZERO, 0) - eps

    def step(x, u):
        xp = x + eps
        return xp, np.exp(Af(xp)) * (u * np.exp(-Af(x)) + Bf(xp) - Bf(x))

    def sampler(rng, n):
        x = rng.uniform(0.5, 1.5, n)
        u = rng.uniform(0.5, 2.0, n)
        xp, up = step(x, u)
        return StencilConfig.from_points(LINEAR_ODE_TEMPLATE, {ZERO: np.stack([x, u], -1), PLUS: np.stack([xp, up], -1)})

    @_named("ode_truncation")
    def continuum(c):
        # exact scheme: the first residual divided by the step
        return E0(c) / (c.coord(PLUS, 0) - c.coord(ZERO, 0))

    return Scheme(
        "linear-ode",
        LINEAR_ODE_TEMPLATE,
        (E0, E1),
        linear_ode_algebra(A, B),
        sampler=sampler,
        continuum_residual=continuum,
        target="u' = A'(x) u + B'(x) exp(A(x))",
        params={"A": A, "B": B, "eps": eps},
        update="x_+ from the mesh equation, then u_+ in closed form",
        step=step,
    )


def nonlinear_ode_scheme(A=0.0, B=0.0, eps: float = 0.1) -> Scheme:
    """Hodograph image of :func:`linear_ode_scheme` on ``(y, v)``, written out."""
    Af, Bf = _fn(A), _fn(B)

    @_named("manifold~")
    def E0(c):
        y, v = c.unpack(ZERO)
        yp, vp = c.unpack(PLUS)
        return yp * np.exp(-Af(vp)) - y * np.exp(-Af(v)) - Bf(vp) + Bf(v)

    @_named("mesh~")
    def E1(c):
        return c.coord(PLUS, 1) - c.coord(ZERO, 1) - eps

    def step(y, v):
        vp = v + eps
        return np.exp(Af(vp)) * (y * np.exp(-Af(v)) + Bf(vp) - Bf(v)), vp

    def sampler(rng, n):
        v = rng.uniform(0.5, 1.5, n)
        y = rng.uniform(0.5, 2.0, n)
        yp, vp = step(y, v)
        return StencilConfig.from_points(NONLINEAR_ODE_TEMPLATE, {ZERO: np.stack([y, v], -1), PLUS: np.stack([yp, vp], -1)})

    @_named("ode_truncation~")
    def continuum(c):
        return E0(c) / (c.coord(PLUS, 1) - c.coord(ZERO, 1))

    return Scheme(
        "nl-ode",
        NONLINEAR_ODE_TEMPLATE,
        (E0, E1),
        nonlinear_ode_algebra(A, B),
        sampler=sampler,
        continuum_residual=continuum,
        target="y_v = A'(v) y + B'(v) exp(A(v))",
        params={"A": A, "B": B, "eps": eps},
        update="v_+ = v + eps, then y_+ in closed form",
        step=step,
    )


def linear_ode_solution(A=0.0, B=0.0, eps=0.1, c=0.0, x0=0.0) -> ExactSolution:
    """``x = m ε + x0``, ``u = (B(x) + c) e^{A(x)}``."""
    Af, Bf = _fn(A), _fn(B)

    def lattice(m):
        x = eps * np.asarray(m, dtype=float) + x0
        return np.stack([x, (Bf(x) + c) * np.exp(Af(x))], -1)

    return ExactSolution("linear-ode", 1, 1, lattice, ("x", "u"))


def nonlinear_ode_solution(A=0.0, B=0.0, eps=0.1, c=0.0, v0=0.0) -> ExactSolution:
    """``v = m ε + v0``, ``y = (B(v) + c) e^{A(v)}``; points stored as ``(y, v)``."""
    Af, Bf = _fn(A), _fn(B)

    def lattice(m):
        v = eps * np.asarray(m, dtype=float) + v0
        return np.stack([(Bf(v) + c) * np.exp(Af(v)), v], -1)

    return ExactSolution("nl-ode", 1, 1, lattice, ("y", "v"))


def curve_A(v):
    """Coefficient choice of the curve-overlay run: ``A ≡ 0``."""
    return np.zeros(np.shape(v))


def curve_B(v):
    """``B(v) = √v + 4 e^{√v/2} (2 v^{3/2} - 12 v + 48 √v - 96)``.

    Then ``B'(v) = 1/(2√v) + 2 v e^{√v/2}``, so with ``A ≡ 0`` the scheme's
    continuum limit is ``y_v = B'(v)``, i.e.
    ``v_y (1 + 4 v^{3/2} e^{√v/2}) = 2 √v``.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DomainViolation("B requires v >= 0")
    s = np.sqrt(v)
    return s + 4 * np.exp(s / 2) * (2 * v * s - 12 * v + 48 * s - 96)


def curve_dB(v):
    v = np.asarray(v, dtype=float)
    s = np.sqrt(v)
    return 1 / (2 * s) + 2 * v * np.exp(s / 2)


# --------------------------------------------------------------------- heat


def heat_explicit(x, xp, xm, u, up, um, tau):
    """Mesh step ``Δx̂`` and right-hand side of the amplitude equation.

    ``û = u sqrt(exp(-Δx̂^2/(2τ)) / rhs)`` then solves the first equation;
    ``rhs <= 0`` means ``τ`` is too large for the positive branch.
    """
    dxp, dxm = xp - x, x - xm
    lp, lm = np.log(up / u), np.log(um / u)
    s = dxp + dxm
    dxh = 2 * tau / s * (dxp / dxm * lm - dxm / dxp * lp)
    rhs = 1 - 4 * tau / s * (lp / dxp + lm / dxm)
    return dxh, rhs


def heat_amplitude(u, dxh, rhs, tau):
    rhs = np.asarray(rhs, dtype=float)
    if np.any(rhs <= 0):
        raise StepTooLarge(f"time step {tau} leaves no positive amplitude (min rhs {rhs.min():.3e})")
    return u * np.sqrt(np.exp(-dxh**2 / (2 * tau)) / rhs)


def _heat_points(c):
    x, t, u = c.unpack(ZERO)
    xp, tp, up = c.unpack(PLUS)
    xm, _, um = c.unpack(MINUS)
    xh, th, uh = c.unpack(HAT)
    _require_positive(u, up, um, uh, what="u")
    _require_nonzero(xp - x, x - xm, th - t)
    return x, t, u, xp, tp, up, xm, um, xh, th, uh


@_named("heat_amplitude")
def heat_E0(c):
    x, t, u, xp, _, up, xm, um, xh, th, uh = _heat_points(c)
    dxp, dxm, dth, dxh = xp - x, x - xm, th - t, xh - x
    lp, lm = np.log(up / u), np.log(um / u)
    rhs = 1 - 4 * dth / (dxp + dxm) * (lp / dxp + lm / dxm)
    return (u / uh) ** 2 * np.exp(-(dxh**2) / (2 * dth)) - rhs


@_named("flat_layer")
def heat_E1(c):
    return c.coord(PLUS, 1) - c.coord(ZERO, 1)


@_named("heat_mesh")
def heat_E2(c):
    x, t, u, xp, _, up, xm, um, xh, th, uh = _heat_points(c)
    dxp, dxm, dth = xp - x, x - xm, th - t
    lp, lm = np.log(up / u), np.log(um / u)
    return (xh - x) - 2 * dth / (dxp + dxm) * (dxp / dxm * lm - dxm / dxp * lp)


@_named("heat_truncation")
def heat_truncation(c):
    """First residual divided by ``Δt̂``."""
    return heat_E0(c) / (c.coord(HAT, 1) - c.coord(ZERO, 1))


def heat_zero_set_sampler(rng, n):
    """Heat stencils with ``x̂, û`` computed from the scheme."""

    def draw(rng, k):
        c = heat_sampler(rng, k)
        x, t, u = c.unpack(ZERO)
        xp, _, up = c.unpack(PLUS)
        xm, _, um = c.unpack(MINUS)
        tau = rng.uniform(0.01, 0.04, k)
        dxh, rhs = heat_explicit(x, xp, xm, u, up, um, tau)
        ok = rhs > 0.2
        uh = u * np.sqrt(np.exp(-dxh**2 / (2 * tau)) / np.where(ok, rhs, 1.0))
        coords = np.array(c.coords)
        coords[:, 3] = np.stack([x + dxh, t + tau, uh], -1)
        return StencilConfig(HEAT_TEMPLATE, coords), ok

    return _collect(draw, n, rng)


def heat_scheme(tau: float | None = None) -> Scheme:
    """Explicit invariant scheme for ``u_t = u_xx`` on an evolving mesh.

    Residuals: the amplitude equation, the flat-layer condition ``t_+ = t``
    and the mesh-velocity equation for ``Δx̂``. The step ``tau`` is only
    recorded; the residuals read ``Δt̂`` from the stencil.
    """
    return Scheme(
        "heat",
        HEAT_TEMPLATE,
        (heat_E0, heat_E1, heat_E2),
        heat_algebra(),
        sampler=heat_zero_set_sampler,
        continuum_residual=heat_truncation,
        target="u_t = u_xx",
        params={"tau": tau},
        update="x̂ from the mesh equation, then û on the positive branch",
    )


def _nl_points(c):
    y, t, v = c.unpack(ZERO)
    yp, _, vp = c.unpack(PLUS)
    ym, _, vm = c.unpack(MINUS)
    yh, th, vh = c.unpack(HAT)
    _require_positive(y, yp, ym, yh, what="y")
    _require_nonzero(vp - v, v - vm, vp - vm, th - t, what="v step")
    return y, t, v, yp, vp, ym, vm, yh, th, vh


@_named("nl_heat_amplitude")
def nl_heat_E0(c):
    y, t, v, yp, vp, ym, vm, yh, th, vh = _nl_points(c)
    dth = th - t
    lp, lm = np.log(yp / y), np.log(ym / y)
    rhs = 1 - 4 * dth / (vp - vm) * (lp / (vp - v) + lm / (v - vm))
    return (y / yh) ** 2 * np.exp(-((vh - v) ** 2) / (2 * dth)) - rhs


@_named("nl_heat_mesh")
def nl_heat_E2(c):
    y, t, v, yp, vp, ym, vm, yh, th, vh = _nl_points(c)
    dth = th - t
    lp, lm = np.log(yp / y), np.log(ym / y)
    return (vh - v) - 2 * dth / (vp - vm) * ((vp - v) / (v - vm) * lm - (v - vm) / (vp - v) * lp)


@_named("nl_heat_truncation")
def nl_heat_truncation(c):
    return nl_heat_E0(c) / (c.coord(HAT, 1) - c.coord(ZERO, 1))


def nl_heat_explicit(v, vp, vm, y, yp, ym, tau):
    """``Δv̂`` and the amplitude right-hand side of the nonlinear heat scheme."""
    lp, lm = np.log(yp / y), np.log(ym / y)
    dvh = 2 * tau / (vp - vm) * ((vp - v) / (v - vm) * lm - (v - vm) / (vp - v) * lp)
    rhs = 1 - 4 * tau / (vp - vm) * (lp / (vp - v) + lm / (v - vm))
    return dvh, rhs


def nl_heat_zero_set_sampler(rng, n):
    def draw(rng, k):
        c = nl_heat_sampler(rng, k)
        y, t, v = c.unpack(ZERO)
        yp, _, vp = c.unpack(PLUS)
        ym, _, vm = c.unpack(MINUS)
        tau = rng.uniform(0.01, 0.04, k)
        dvh, rhs = nl_heat_explicit(v, vp, vm, y, yp, ym, tau)
        ok = rhs > 0.2
        yh = y * np.sqrt(np.exp(-dvh**2 / (2 * tau)) / np.where(ok, rhs, 1.0))
        coords = np.array(c.coords)
        coords[:, 3] = np.stack([yh, t + tau, v + dvh], -1)
        return StencilConfig(NL_HEAT_TEMPLATE, coords), ok

    return _collect(draw, n, rng)


def nonlinear_heat_scheme(tau: float | None = None) -> Scheme:
    """Explicit invariant scheme for ``v_t = v_yy / v_y^2``, written out by hand."""
    return Scheme(
        "nl-heat",
        NL_HEAT_TEMPLATE,
        (nl_heat_E0, heat_E1, nl_heat_E2),
        nonlinear_heat_algebra(),
        sampler=nl_heat_zero_set_sampler,
        continuum_residual=nl_heat_truncation,
        target="v_t = v_yy / v_y^2",
        params={"tau": tau},
        update="v̂ from the mesh equation, then ŷ on the positive branch",
    )


def heat_exponential_solution(h=0.1, tau=0.01, c=1.0, K=1.0, x0=0.0, t0=1.0) -> ExactSolution:
    """``t = τm + t0``, ``x = hn + x0 + 2ct``, ``u = K e^{-cx + c^2 t}``."""

    def lattice(m, n):
        t = tau * np.asarray(m, dtype=float) + t0
        x = h * np.asarray(n, dtype=float) + x0 + 2 * c * t
        t = np.broadcast_to(t, x.shape)
        return np.stack([x, t, K * np.exp(-c * x + c * c * t)], -1)

    return ExactSolution("heat-exponential", 2, 1, lattice, ("x", "t", "u"))


def heat_source_solution(h=0.1, tau=0.01, x0=0.0, t0=1.0) -> ExactSolution:
    """``t = τm + t0``, ``x = (hn + x0) t``, ``u = (4πt)^{-1/2} e^{-x^2/(4t)}``."""

    def lattice(m, n):
        t = tau * np.asarray(m, dtype=float) + t0
        x = (h * np.asarray(n, dtype=float) + x0) * t
        t = np.broadcast_to(t, x.shape)
        return np.stack([x, t, np.exp(-x * x / (4 * t)) / np.sqrt(4 * np.pi * t)], -1)

    return ExactSolution("heat-source", 2, 1, lattice, ("x", "t", "u"))


def nl_heat_exponential_solution(h=0.1, tau=0.01, c=1.0, K=1.0, v0=0.0, t0=1.0) -> ExactSolution:
    """``v = hn + v0 + 2ct``, ``y = K e^{-cv + c^2 t}``; points ``(y, t, v)``."""

    def lattice(m, n):
        t = tau * np.asarray(m, dtype=float) + t0
        v = h * np.asarray(n, dtype=float) + v0 + 2 * c * t
        t = np.broadcast_to(t, v.shape)
        return np.stack([K * np.exp(-c * v + c * c * t), t, v], -1)

    return ExactSolution("nl-heat-exponential", 2, 1, lattice, ("y", "t", "v"))


def nl_heat_source_solution(h=0.1, tau=0.01, v0=0.0, t0=1.0) -> ExactSolution:
    """``v = (hn + v0) t``, ``y = (4πt)^{-1/2} e^{-v^2/(4t)}``."""

    def lattice(m, n):
        t = tau * np.asarray(m, dtype=float) + t0
        v = (h * np.asarray(n, dtype=float) + v0) * t
        t = np.broadcast_to(t, v.shape)
        return np.stack([np.exp(-v * v / (4 * t)) / np.sqrt(4 * np.pi * t), t, v], -1)

    return ExactSolution("nl-heat-source", 2, 1, lattice, ("y", "t", "v"))


def hodograph_solution(sol: ExactSolution) -> ExactSolution:
    return pushforward_solution(hodograph(sol.p), sol)


# --------------------------------------------------------------------- wave


def _wave_F(F):
    return _fn(0.0) if F is None else _fn(F)


def wave_scheme_yz(F=None, eps: float = 0.1, delta: float = 0.1) -> Scheme:
    """Invariant scheme for ``u_yz = F(u)`` on the orthogonal characteristic lattice.

    Residuals, with the invariants ``I1..I10`` of the six-point stencil::

        (I6 - I5)/(I8 I10) - (I2 - I1)/I10 - F(I1)
        ŷ - y,   z_+ - z,   I7 - 1,   I9 - 1

    ``eps`` and ``delta`` are the lattice steps used by the marcher; z
    decreases by ``delta`` per m-layer so that ``t = (y - z)/2`` increases.
    """
    Ff = _wave_F(F)

    def parts(c):
        dyp = c.coord(PLUS, 0) - c.coord(ZERO, 0)
        dyhp = c.coord(HAT_PLUS, 0) - c.coord(HAT, 0)
        dzh = c.coord(HAT, 1) - c.coord(ZERO, 1)
        _require_nonzero(dyp, dyhp, dzh)
        return dyp, dyhp, dzh

    @_named("wave_yz")
    def E0(c):
        dyp, dyhp, dzh = parts(c)
        I8, I10 = dyhp / dyp, dyp * dzh
        u = c.coord(ZERO, 2)
        return (c.coord(HAT_PLUS, 2) - c.coord(HAT, 2)) / (I8 * I10) - (c.coord(PLUS, 2) - u) / I10 - Ff(u)

    @_named("y_layer")
    def E1(c):
        return c.coord(HAT, 0) - c.coord(ZERO, 0)

    @_named("z_layer")
    def E2(c):
        return c.coord(PLUS, 1) - c.coord(ZERO, 1)

    @_named("uniform_y")
    def E3(c):
        _require_nonzero(c.coord(ZERO, 0) - c.coord(MINUS, 0))
        return (c.coord(PLUS, 0) - c.coord(ZERO, 0)) / (c.coord(ZERO, 0) - c.coord(MINUS, 0)) - 1

    @_named("uniform_z")
    def E4(c):
        _require_nonzero(c.coord(ZERO, 1) - c.coord(CHECK, 1))
        return (c.coord(HAT, 1) - c.coord(ZERO, 1)) / (c.coord(ZERO, 1) - c.coord(CHECK, 1)) - 1

    def sampler(rng, n):
        y = rng.uniform(-1.0, 1.0, n)
        z = rng.uniform(-1.0, 1.0, n)
        e = rng.uniform(0.1, 0.5, n)
        d = rng.uniform(0.1, 0.5, n)
        ehp = rng.uniform(0.1, 0.5, n)
        u = rng.uniform(-1.0, 1.0, (5, n))
        u0, up, um, uc, uh = u
        # solve the first residual for û_+
        uhp = uh + (ehp / e) * (up - u0) + (ehp / e) * (e * -d) * Ff(u0)
        pts = {
            HAT: np.stack([y, z - d, uh], -1),
            ZERO: np.stack([y, z, u0], -1),
            CHECK: np.stack([y, z + d, uc], -1),
            PLUS: np.stack([y + e, z, up], -1),
            MINUS: np.stack([y - e, z, um], -1),
            HAT_PLUS: np.stack([y + ehp, z - d, uhp], -1),
        }
        return StencilConfig.from_points(WAVE_YZ_TEMPLATE, pts)

    return Scheme(
        "wave-yz",
        WAVE_YZ_TEMPLATE,
        (E0, E1, E2, E3, E4),
        wave_algebra_yz(),
        sampler=sampler,
        continuum_residual=E0,
        target="u_yz = F(u)",
        params={"F": F, "eps": eps, "delta": delta},
        update="û_+ = û + I8 (u_+ - u) + I8 I10 F(u)",
    )


def wave_scheme_xt(F=None, eps: float = 0.1, delta: float = 0.1) -> Scheme:
    """Invariant scheme for ``u_tt - u_xx = -4F(u)`` on the 45°-rotated lattice.

    The first residual keeps the invariant form
    ``(I6 - I5)/(I8 I10) - (I2 - I1)/I10 - F(I1)`` with
    ``I8 = Δx̂_+/Δx_+`` and ``I10 = -4 Δx_+ Δt̂``; multiplied by ``-4`` it is
    ``(û_+ - û)/(Δx̂_+ Δt̂) - (u_+ - u)/(Δx_+ Δt̂) + 4F(u)``, see
    :func:`wave_xt_expanded`. Mesh residuals: ``Δx̂ + Δt̂``,
    ``Δx_+ - Δt_+``, ``I7 - 1``, ``I9 - 1``.
    """
    Ff = _wave_F(F)

    @_named("wave_xt")
    def E0(c):
        dxp = c.coord(PLUS, 0) - c.coord(ZERO, 0)
        dxhp = c.coord(HAT_PLUS, 0) - c.coord(HAT, 0)
        dth = c.coord(HAT, 1) - c.coord(ZERO, 1)
        _require_nonzero(dxp, dxhp, dth)
        I8, I10 = dxhp / dxp, -4 * dxp * dth
        u = c.coord(ZERO, 2)
        return (c.coord(HAT_PLUS, 2) - c.coord(HAT, 2)) / (I8 * I10) - (c.coord(PLUS, 2) - u) / I10 - Ff(u)

    @_named("characteristic_hat")
    def E1(c):
        return (c.coord(HAT, 0) - c.coord(ZERO, 0)) + (c.coord(HAT, 1) - c.coord(ZERO, 1))

    @_named("characteristic_plus")
    def E2(c):
        return (c.coord(PLUS, 0) - c.coord(ZERO, 0)) - (c.coord(PLUS, 1) - c.coord(ZERO, 1))

    @_named("uniform_x")
    def E3(c):
        _require_nonzero(c.coord(ZERO, 0) - c.coord(MINUS, 0))
        return (c.coord(PLUS, 0) - c.coord(ZERO, 0)) / (c.coord(ZERO, 0) - c.coord(MINUS, 0)) - 1

    @_named("uniform_t")
    def E4(c):
        _require_nonzero(c.coord(ZERO, 1) - c.coord(CHECK, 1))
        return (c.coord(HAT, 1) - c.coord(ZERO, 1)) / (c.coord(ZERO, 1) - c.coord(CHECK, 1)) - 1

    yz = wave_scheme_yz(F, eps, delta)
    inv = characteristic().inverted()

    def sampler(rng, n):
        return pushforward_stencil(inv, yz.sampler(rng, n), WAVE_XT_TEMPLATE)

    return Scheme(
        "wave-xt",
        WAVE_XT_TEMPLATE,
        (E0, E1, E2, E3, E4),
        wave_algebra_xt(),
        sampler=sampler,
        continuum_residual=E0,
        target="u_tt - u_xx = -4 F(u)",
        params={"F": F, "eps": eps, "delta": delta},
        update="march in characteristic variables and map back",
    )


def wave_xt_expanded(F=None):
    """Expanded first residual ``(û_+ - û)/(Δx̂_+ Δt̂) - (u_+ - u)/(Δx_+ Δt̂) + 4F(u)``."""
    Ff = _wave_F(F)

    @_named("wave_xt_expanded")
    def E(c):
        dxp = c.coord(PLUS, 0) - c.coord(ZERO, 0)
        dxhp = c.coord(HAT_PLUS, 0) - c.coord(HAT, 0)
        dth = c.coord(HAT, 1) - c.coord(ZERO, 1)
        u = c.coord(ZERO, 2)
        return (c.coord(HAT_PLUS, 2) - c.coord(HAT, 2)) / (dxhp * dth) - (c.coord(PLUS, 2) - u) / (dxp * dth) + 4 * Ff(u)

    return E


def wave_lattice_xt(m, n, eps=0.1, delta=0.1, y0=0.0, z0=0.0):
    """``x = (εn + y0 - δm - z0)/2``, ``t = (εn + y0 + δm + z0)/2``."""
    m, n = np.asarray(m, dtype=float), np.asarray(n, dtype=float)
    return 0.5 * (eps * n + y0 - delta * m - z0), 0.5 * (eps * n + y0 + delta * m + z0)


# ------------------------------------------------------------------- polar

POLAR_TEMPLATE = template_2d((ZERO, PLUS, MINUS, HAT, CHECK), names=("r", "theta", "u"))
CARTESIAN_TEMPLATE = template_2d((ZERO, PLUS, MINUS, HAT, CHECK), names=("x", "y", "u"))


def rotation_algebra_polar() -> SymmetryAlgebra:
    return SymmetryAlgebra((VectorField.from_components("d_theta", 2, 1, lambda r, th, u: (0.0, 1.0, 0.0)),), 2, 1, "rotation")


def rotation_algebra_cartesian() -> SymmetryAlgebra:
    return SymmetryAlgebra(
        (VectorField.from_components("rotation", 2, 1, lambda x, y, u: (-y, x, 0.0)),), 2, 1, "rotation"
    )


def _F2(F):
    """Right-hand side ``F(u, r)``; one-argument callables ignore r."""
    if F is None:
        return lambda u, r: np.zeros(np.shape(u))
    if not callable(F):
        c = float(F)
        return lambda u, r: np.full(np.broadcast_shapes(np.shape(u), np.shape(r)), c)
    try:
        F(np.zeros(1), np.ones(1))
        return F
    except TypeError:
        return lambda u, r: F(u)


def polar_laplace_scheme(F=None, eps: float = 0.1, delta: float = 0.1) -> Scheme:
    """Five-point scheme for ``u_rr + u_r/r + u_θθ/r^2 = F(u, r)`` on a polar lattice."""
    Ff = _F2(F)

    @_named("polar_laplace")
    def E0(c):
        r, _, u = c.unpack(ZERO)
        _require_positive(r, what="r")
        up, um, uh, uc = (c.coord(lab, 2) for lab in (PLUS, MINUS, HAT, CHECK))
        return (up - 2 * u + um) / eps**2 + (up - u) / (r * eps) + (uh - 2 * u + uc) / (r**2 * delta**2) - Ff(u, r)

    @_named("r_layer")
    def E1(c):
        return c.coord(HAT, 0) - c.coord(ZERO, 0)

    @_named("r_step")
    def E2(c):
        return c.coord(PLUS, 0) - c.coord(ZERO, 0) - eps

    @_named("theta_layer")
    def E3(c):
        return wrap_angle(c.coord(PLUS, 1) - c.coord(ZERO, 1))

    @_named("theta_step")
    def E4(c):
        return wrap_angle(c.coord(HAT, 1) - c.coord(ZERO, 1) - delta)

    @_named("polar_truncation")
    def continuum(c):
        # same stencil, steps read from the points
        r, th, u = c.unpack(ZERO)
        e = c.coord(PLUS, 0) - r
        d = c.coord(HAT, 1) - th
        up, um, uh, uc = (c.coord(lab, 2) for lab in (PLUS, MINUS, HAT, CHECK))
        return (up - 2 * u + um) / e**2 + (up - u) / (r * e) + (uh - 2 * u + uc) / (r**2 * d**2) - Ff(u, r)

    def sampler(rng, n):
        r = rng.uniform(1.0, 2.0, n)
        th = rng.uniform(-np.pi, np.pi, n)
        u, up, uh, uc = rng.uniform(-1.0, 1.0, (4, n))
        um = eps**2 * (Ff(u, r) - (up - u) / (r * eps) - (uh - 2 * u + uc) / (r**2 * delta**2)) - up + 2 * u
        pts = {
            ZERO: np.stack([r, th, u], -1),
            PLUS: np.stack([r + eps, th, up], -1),
            MINUS: np.stack([r - eps, th, um], -1),
            HAT: np.stack([r, th + delta, uh], -1),
            CHECK: np.stack([r, th - delta, uc], -1),
        }
        return StencilConfig.from_points(POLAR_TEMPLATE, pts)

    return Scheme(
        "polar-laplace",
        POLAR_TEMPLATE,
        (E0, E1, E2, E3, E4),
        rotation_algebra_polar(),
        sampler=sampler,
        continuum_residual=continuum,
        target="u_rr + u_r/r + u_θθ/r^2 = F(u, r)",
        params={"F": F, "eps": eps, "delta": delta},
        update="Gauss-Seidel sweeps",
    )


def cartesian_laplace_scheme(F=None, eps: float = 0.1, delta: float = 0.1) -> Scheme:
    """The polar scheme carried to ``(x, y)`` by the polar chart."""
    base = polar_laplace_scheme(F, eps, delta)
    s = pushforward_scheme(polar(), base, template=CARTESIAN_TEMPLATE, name="cartesian-laplace")
    return replace(s, target="u_xx + u_yy = F(u, sqrt(x^2 + y^2))")


def cartesian_laplace_direct(F=None, eps: float = 0.1, delta: float = 0.1):
    """Cartesian residuals written out with ``hypot`` and ``atan2`` (independent oracle)."""
    Ff = _F2(F)

    def rad(c, lab):
        return np.hypot(c.coord(lab, 0), c.coord(lab, 1))

    def ang(c, lab):
        return np.arctan2(c.coord(lab, 1), c.coord(lab, 0))

    def E(c):
        r = rad(c, ZERO)
        u, up, um, uh, uc = (c.coord(lab, 2) for lab in (ZERO, PLUS, MINUS, HAT, CHECK))
        de = (up - 2 * u + um) / eps**2 + (up - u) / (r * eps) + (uh - 2 * u + uc) / (r * r * delta**2) - Ff(u, r)
        return np.stack(
            [
                de,
                rad(c, HAT) - r,
                rad(c, PLUS) - r - eps,
                wrap_angle(ang(c, PLUS) - ang(c, ZERO)),
                wrap_angle(ang(c, HAT) - ang(c, ZERO) - delta),
            ],
            -1,
        )

    return E


def polar_lattice(m, n, eps=0.1, delta=0.1, r0=1.0, theta0=0.0):
    """``r = εn + r0``, ``θ = δm + θ0`` and the cartesian image."""
    m, n = np.asarray(m, dtype=float), np.asarray(n, dtype=float)
    r, th = eps * n + r0, delta * m + theta0
    return r, th, r * np.cos(th), r * np.sin(th)


# ------------------------------------------------- standard comparison schemes


def heat_ftcs_scheme(h: float = 0.1, tau: float = 0.004) -> Scheme:
    """Forward-time centred-space heat scheme on a fixed uniform mesh (not invariant)."""

    @_named("ftcs")
    def E0(c):
        x, t, u = c.unpack(ZERO)
        dxp = c.coord(PLUS, 0) - x
        dxm = x - c.coord(MINUS, 0)
        dth = c.coord(HAT, 1) - t
        up, um, uh = c.coord(PLUS, 2), c.coord(MINUS, 2), c.coord(HAT, 2)
        return (uh - u) / dth - 2 * (dxm * up - (dxp + dxm) * u + dxp * um) / (dxp * dxm * (dxp + dxm))

    @_named("fixed_mesh")
    def E2(c):
        return c.coord(HAT, 0) - c.coord(ZERO, 0)

    def sampler(rng, n):
        coords = np.array(heat_sampler(rng, n).coords)
        x, t, u = (coords[:, 0, k] for k in range(3))
        xp, up, xm, um = coords[:, 1, 0], coords[:, 1, 2], coords[:, 2, 0], coords[:, 2, 2]
        lap = 2 * ((x - xm) * up - (xp - xm) * u + (xp - x) * um) / ((xp - x) * (x - xm) * (xp - xm))
        coords[:, 3] = np.stack([x, t + tau, u + tau * lap], -1)
        return StencilConfig(HEAT_TEMPLATE, coords)

    return Scheme(
        "heat-ftcs",
        HEAT_TEMPLATE,
        (E0, heat_E1, E2),
        heat_algebra(),
        sampler=sampler,
        continuum_residual=E0,
        target="u_t = u_xx",
        params={"h": h, "tau": tau},
        invariant=False,
        update="explicit",
    )


def laplace_5pt_scheme(F=None, h: float = 0.1) -> Scheme:
    """Standard five-point Laplacian on a square mesh (not rotation invariant)."""
    Ff = _F2(F)

    @_named("five_point")
    def E0(c):
        # steps are read from the stencil so refinement studies can reuse the scheme
        x, y, u = c.unpack(ZERO)
        hx, hy = c.coord(PLUS, 0) - x, c.coord(HAT, 1) - y
        up, um, uh, uc = (c.coord(lab, 2) for lab in (PLUS, MINUS, HAT, CHECK))
        return (up - 2 * u + um) / hx**2 + (uh - 2 * u + uc) / hy**2 - Ff(u, np.hypot(x, y))

    eqs = (
        E0,
        _named("x_layer")(lambda c: c.coord(HAT, 0) - c.coord(ZERO, 0)),
        _named("x_step")(lambda c: c.coord(PLUS, 0) - c.coord(ZERO, 0) - h),
        _named("y_layer")(lambda c: c.coord(PLUS, 1) - c.coord(ZERO, 1)),
        _named("y_step")(lambda c: c.coord(HAT, 1) - c.coord(ZERO, 1) - h),
    )

    def sampler(rng, n):
        x, y = rng.uniform(-1.0, 1.0, (2, n))
        u, up, uh, uc = rng.uniform(-1.0, 1.0, (4, n))
        um = h**2 * (Ff(u, np.hypot(x, y)) - (uh - 2 * u + uc) / h**2) - up + 2 * u
        pts = {
            ZERO: np.stack([x, y, u], -1),
            PLUS: np.stack([x + h, y, up], -1),
            MINUS: np.stack([x - h, y, um], -1),
            HAT: np.stack([x, y + h, uh], -1),
            CHECK: np.stack([x, y - h, uc], -1),
        }
        return StencilConfig.from_points(CARTESIAN_TEMPLATE, pts)

    return Scheme(
        "laplace-5pt",
        CARTESIAN_TEMPLATE,
        eqs,
        rotation_algebra_cartesian(),
        sampler=sampler,
        continuum_residual=E0,
        target="u_xx + u_yy = F(u, r)",
        params={"F": F, "h": h},
        invariant=False,
        update="Gauss-Seidel sweeps",
    )


WAVE_STANDARD_TEMPLATE = template_2d((ZERO, PLUS, MINUS, HAT, CHECK), names=("x", "t", "u"))


def wave_standard_scheme(F=None, h: float = 0.1, tau: float = 0.05) -> Scheme:
    """Leapfrog ``(û - 2u + ǔ)/τ^2 - (u_+ - 2u + u_-)/h^2 = -4F(u)`` on a fixed mesh."""
    Ff = _wave_F(F)

    @_named("leapfrog")
    def E0(c):
        hx = c.coord(PLUS, 0) - c.coord(ZERO, 0)
        ht = c.coord(HAT, 1) - c.coord(ZERO, 1)
        u, up, um, uh, uc = (c.coord(lab, 2) for lab in (ZERO, PLUS, MINUS, HAT, CHECK))
        return (uh - 2 * u + uc) / ht**2 - (up - 2 * u + um) / hx**2 + 4 * Ff(u)

    eqs = (
        E0,
        _named("x_fixed")(lambda c: c.coord(HAT, 0) - c.coord(ZERO, 0)),
        _named("t_layer")(lambda c: c.coord(PLUS, 1) - c.coord(ZERO, 1)),
    )

    def sampler(rng, n):
        x, t = rng.uniform(-1.0, 1.0, (2, n))
        u, up, um, uc = rng.uniform(-1.0, 1.0, (4, n))
        uh = tau**2 * ((up - 2 * u + um) / h**2 - 4 * Ff(u)) + 2 * u - uc
        pts = {
            ZERO: np.stack([x, t, u], -1),
            PLUS: np.stack([x + h, t, up], -1),
            MINUS: np.stack([x - h, t, um], -1),
            HAT: np.stack([x, t + tau, uh], -1),
            CHECK: np.stack([x, t - tau, uc], -1),
        }
        return StencilConfig.from_points(WAVE_STANDARD_TEMPLATE, pts)

    return Scheme(
        "wave-standard",
        WAVE_STANDARD_TEMPLATE,
        eqs,
        wave_algebra_xt(),
        sampler=sampler,
        continuum_residual=E0,
        target="u_tt - u_xx = -4 F(u)",
        params={"F": F, "h": h, "tau": tau},
        invariant=False,
        update="explicit leapfrog",
    )


# ---------------------------------------------------------- consistency order


@dataclass
class OrderEstimate:
    """Least-squares slope of ``log|residual|`` against ``log(step)``."""

    order: float | None
    exact: bool
    steps: list
    errors: list

    def to_dict(self):
        return {"order": self.order, "exact": self.exact, "steps": list(self.steps), "errors": list(self.errors)}

    def __str__(self):
        if self.exact:
            return "exact"
        return f"order {self.order:.3f}"


EXACT_FLOOR = 1e-10


def consistency_order(scheme: Scheme, probe: Callable, steps: Sequence[float], floor: float = EXACT_FLOOR) -> OrderEstimate:
    """Measure how fast the scheme's normalised residual vanishes on a smooth solution.

    ``probe(h)`` returns a single stencil sampled from the solution with the
    scheme's mesh equations enforced. Residuals at or below ``floor`` on
    every level mean the solution is exact for the scheme.
    """
    if scheme.continuum_residual is None:
        raise ValueError(f"{scheme.name} declares no continuum residual")
    steps = [float(h) for h in steps]
    errors = [float(np.max(np.abs(scheme.continuum_residual(probe(h))))) for h in steps]
    err = np.array(errors)
    if np.all(err <= floor):
        return OrderEstimate(None, True, steps, errors)
    keep = err > floor
    if np.sum(keep) < 2:
        return OrderEstimate(None, True, steps, errors)
    slope = np.polyfit(np.log(np.array(steps)[keep]), np.log(err[keep]), 1)[0]
    return OrderEstimate(float(slope), False, steps, errors)


# smooth, non-exact solutions used by the refinement studies


def heat_smooth(x, t):
    """``u = 2 + e^{-t} sin x`` solves ``u_t = u_xx``."""
    return 2 + np.exp(-t) * np.sin(x)


def heat_probe(h, kappa=0.5, x=0.3, t=0.5, solution=heat_smooth):
    """Heat stencil on ``solution`` with ``Δx_+ = h``, ``Δx_- = 0.8h``, ``τ = κh``.

    ``x̂`` comes from the mesh equation, ``û`` from the solution itself.
    """
    tau = kappa * h
    xp, xm = x + h, x - 0.8 * h
    u, up, um = solution(x, t), solution(xp, t), solution(xm, t)
    dxh, _ = heat_explicit(x, xp, xm, u, up, um, tau)
    xh, th = x + dxh, t + tau
    pts = {
        ZERO: [x, t, u],
        PLUS: [xp, t, up],
        MINUS: [xm, t, um],
        HAT: [xh, th, solution(xh, th)],
    }
    return StencilConfig.from_points(HEAT_TEMPLATE, pts)


def nl_heat_smooth_inverse(y, t):
    """``v(y, t) = arcsin((y - 2) e^t)``: the hodograph image of :func:`heat_smooth`."""
    return np.arcsin((y - 2) * np.exp(t))


def nl_heat_probe(h, kappa=0.5, v=0.3, t=0.5):
    """Nonlinear-heat stencil with ``Δy_+ = h``, ``Δy_- = 0.8h`` on the smooth solution."""
    tau = kappa * h
    y = heat_smooth(v, t)
    yp, ym = y + h, y - 0.8 * h
    vp, vm = nl_heat_smooth_inverse(yp, t), nl_heat_smooth_inverse(ym, t)
    dvh, _ = nl_heat_explicit(v, vp, vm, y, yp, ym, tau)
    vh, th = v + dvh, t + tau
    pts = {
        ZERO: [y, t, v],
        PLUS: [yp, t, vp],
        MINUS: [ym, t, vm],
        HAT: [heat_smooth(vh, th), th, vh],
    }
    return StencilConfig.from_points(NL_HEAT_TEMPLATE, pts)


def heat_ftcs_probe(tau, x=0.3, t=0.5, solution=heat_smooth):
    """FTCS stencil with parabolic scaling ``h = 2 sqrt(τ)``."""
    h = 2 * np.sqrt(tau)
    pts = {
        ZERO: [x, t, solution(x, t)],
        PLUS: [x + h, t, solution(x + h, t)],
        MINUS: [x - h, t, solution(x - h, t)],
        HAT: [x, t + tau, solution(x, t + tau)],
    }
    return StencilConfig.from_points(HEAT_TEMPLATE, pts)


WAVE_PROBE_A = 1.3


def wave_smooth_yz(y, z, a=WAVE_PROBE_A):
    """``u = exp(a y + z/a)`` solves ``u_yz = u``."""
    return np.exp(a * y + z / a)


def wave_probe_yz(h, y=0.2, z=0.1):
    """Characteristic-lattice stencil with ``ε = h``, ``δ = 0.8h`` (use with ``F(u) = u``)."""
    e, d = h, 0.8 * h
    pts = {}
    for lab, (yy, zz) in {
        HAT: (y, z - d),
        ZERO: (y, z),
        CHECK: (y, z + d),
        PLUS: (y + e, z),
        MINUS: (y - e, z),
        HAT_PLUS: (y + e, z - d),
    }.items():
        pts[lab] = [yy, zz, wave_smooth_yz(yy, zz)]
    return StencilConfig.from_points(WAVE_YZ_TEMPLATE, pts)


def polar_smooth(r, th):
    """``u = r^2 + r cos θ``; its Laplacian is 4."""
    return r * r + r * np.cos(th)


def polar_probe(h, r=1.3, th=0.4):
    """Polar stencil with ``ε = δ = h`` on :func:`polar_smooth` (use ``F = 4``)."""
    pts = {}
    for lab, (rr, tt) in {ZERO: (r, th), PLUS: (r + h, th), MINUS: (r - h, th), HAT: (r, th + h), CHECK: (r, th - h)}.items():
        pts[lab] = [rr, tt, polar_smooth(rr, tt)]
    return StencilConfig.from_points(POLAR_TEMPLATE, pts)


def wave_smooth_xt(x, t, a=WAVE_PROBE_A):
    """:func:`wave_smooth_yz` in physical variables; solves ``u_tt - u_xx = -4u``."""
    return wave_smooth_yz(x + t, x - t, a)


def wave_standard_probe(h, x=0.15, t=0.05):
    """Leapfrog stencil with ``Δx = h``, ``Δt = 0.8h`` (use with ``F(u) = u``)."""
    k = 0.8 * h
    pts = {}
    for lab, (xx, tt) in {ZERO: (x, t), PLUS: (x + h, t), MINUS: (x - h, t), HAT: (x, t + k), CHECK: (x, t - k)}.items():
        pts[lab] = [xx, tt, wave_smooth_xt(xx, tt)]
    return StencilConfig.from_points(WAVE_STANDARD_TEMPLATE, pts)


def laplace_smooth(x, y):
    """``u = x^2 + y^2 + x``; its Laplacian is 4."""
    return x * x + y * y + x


def laplace_probe(h, x=0.4, y=0.7):
    """Square five-point stencil on :func:`laplace_smooth` plus the harmonic ``sin x e^y`` (use ``F = 4``)."""
    pts = {}
    for lab, (xx, yy) in {ZERO: (x, y), PLUS: (x + h, y), MINUS: (x - h, y), HAT: (x, y + h), CHECK: (x, y - h)}.items():
        pts[lab] = [xx, yy, laplace_smooth(xx, yy) + np.sin(xx) * np.exp(yy)]
    return StencilConfig.from_points(CARTESIAN_TEMPLATE, pts)


# ------------------------------------------------------------------ registry


SCHEMES = {
    "heat": lambda tau=None, **_: heat_scheme(tau),
    "nl-heat": lambda tau=None, **_: nonlinear_heat_scheme(tau),
    "linear-ode": lambda A=0.0, B=0.0, eps=0.1, **_: linear_ode_scheme(A, B, eps),
    "nl-ode": lambda A=0.0, B=0.0, eps=0.1, **_: nonlinear_ode_scheme(A, B, eps),
    "wave-yz": lambda F=None, eps=0.1, delta=0.1, **_: wave_scheme_yz(F, eps, delta),
    "wave-xt": lambda F=None, eps=0.1, delta=0.1, **_: wave_scheme_xt(F, eps, delta),
    "polar-laplace": lambda F=None, eps=0.1, delta=0.1, **_: polar_laplace_scheme(F, eps, delta),
    "cartesian-laplace": lambda F=None, eps=0.1, delta=0.1, **_: cartesian_laplace_scheme(F, eps, delta),
    "heat-ftcs": lambda h=0.1, tau=0.004, **_: heat_ftcs_scheme(h, tau),
    "laplace-5pt": lambda F=None, h=0.1, **_: laplace_5pt_scheme(F, h),
    "wave-standard": lambda F=None, h=0.1, tau=0.05, **_: wave_standard_scheme(F, h, tau),
}


def get_scheme(name: str, **params) -> Scheme:
    try:
        factory = SCHEMES[name]
    except KeyError:
        raise KeyError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None
    return factory(**params)
