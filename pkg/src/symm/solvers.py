"""
Marching on evolving lattices and an iterative elliptic solver.

Layers are arrays of points ``(N, p+q)`` in chart order. The heat marcher
resolves the explicit scheme node by node: the mesh equation gives ``Δx̂``,
then the amplitude equation gives ``û`` on its positive branch. The two
layer endpoints are supplied by a :class:`BoundaryPolicy`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, MeshTangled, NotConverged, RootFindFailed, StepTooLarge
from .schemes import Scheme, heat_amplitude, heat_explicit, nl_heat_explicit, residuals
from .stencil import SolutionGrid, StencilConfig, build_stencils, interior_bases
from .transforms import ExactSolution, characteristic, polar


# ---------------------------------------------------------------------- ODE


def march_ode(scheme: Scheme, x0: float, u0: float, n_steps: int, newton_tol: float = 1e-12, max_iter: int = 50) -> SolutionGrid:
    """March a two-point ODE scheme from ``(x0, u0)``.

    ``x0, u0`` are the first and second coordinates of the initial point in
    the scheme's chart. Built-in schemes carry a closed-form step; other
    schemes are solved for the next point by Newton's method on all
    residuals with a finite-difference Jacobian.
    """
    pts = np.empty((n_steps + 1, 2))
    pts[0] = (x0, u0)
    step = scheme.step
    for k in range(n_steps):
        if step is not None:
            pts[k + 1] = step(*pts[k])
        else:
            pts[k + 1] = _newton_next(scheme, pts[k], newton_tol, max_iter)
    return SolutionGrid(1, 1, pts, names=scheme.template.names)


def _newton_next(scheme, pt, tol, max_iter):
    tpl = scheme.template

    def F(nxt):
        return residuals(scheme, StencilConfig(tpl, np.stack([pt, nxt])))

    guess = np.array(pt, dtype=float)
    guess[0] += scheme.params.get("eps", 0.1)
    for _ in range(max_iter):
        r = F(guess)
        if np.max(np.abs(r)) < tol:
            return guess
        J = np.empty((len(r), 2))
        for k in range(2):
            h = max(1e-7, 1e-7 * abs(guess[k]))
            e = np.zeros(2)
            e[k] = h
            J[:, k] = (F(guess + e) - F(guess - e)) / (2 * h)
        try:
            delta = np.linalg.lstsq(J, -r, rcond=None)[0]
        except np.linalg.LinAlgError as exc:
            raise RootFindFailed(str(exc)) from None
        guess = guess + delta
        if not np.all(np.isfinite(guess)):
            break
    raise RootFindFailed(f"Newton did not reach {tol:g} in {max_iter} iterations from {pt.tolist()}")


# ------------------------------------------------------------- heat marches


@dataclass(frozen=True)
class MarchState:
    """One layer of an evolving lattice: points ``(N, 3)`` at time ``t``."""

    t: float
    m: int
    layer: np.ndarray
    tau: float | None = None

    def __post_init__(self):
        a = np.array(self.layer, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "layer", a)


@dataclass(frozen=True)
class BoundaryPolicy:
    """How the two endpoints of a new layer are obtained.

    ``trace``: points read from an exact solution, payload ``(solution, n0)``
    where ``n0`` is the lattice index of the first node.
    ``fixed``: endpoints keep their position, payload ``(left, right)`` values.
    ``copy``: each endpoint copies the mesh step and the log-ratio of the
    solution values from its interior neighbour.
    """

    kind: str
    payload: object = None

    def __post_init__(self):
        if self.kind not in ("trace", "fixed", "copy"):
            raise ValueError(f"unknown boundary policy {self.kind!r}")

    @classmethod
    def trace(cls, solution: ExactSolution, n0: int = 0):
        return cls("trace", (solution, n0))

    @classmethod
    def fixed(cls, left: float, right: float):
        return cls("fixed", (float(left), float(right)))

    @classmethod
    def copy(cls):
        return cls("copy")


def _endpoints(policy, state, new, tau, pos, val):
    """Fill rows 0 and -1 of ``new``; ``pos``/``val`` index the moving and the value coordinate."""
    old = state.layer
    if policy.kind == "trace":
        sol, n0 = policy.payload
        n_last = n0 + len(old) - 1
        ends = sol.sample(np.array([state.m + 1, state.m + 1]), np.array([n0, n_last]))
        if np.any(np.abs(ends[:, 1] - (state.t + tau)) > 1e-12 * max(1.0, abs(state.t))):
            raise ValueError("trace boundary: time step does not match the exact solution's lattice")
        new[0], new[-1] = ends[0], ends[1]
    elif policy.kind == "fixed":
        left, right = policy.payload
        new[0] = old[0]
        new[-1] = old[-1]
        new[0, val], new[-1, val] = left, right
    else:
        for end, inner in ((0, 1), (-1, -2)):
            new[end, pos] = old[end, pos] + (new[inner, pos] - old[inner, pos])
            new[end, val] = old[end, val] * (new[inner, val] / old[inner, val])
    new[:, 1] = state.t + tau


def _check_layer(layer, pos, val, positive_values):
    d = np.diff(layer[:, pos])
    if not (np.all(d > 0) or np.all(d < 0)):
        raise MeshTangled("layer is no longer strictly monotone")
    if positive_values and np.any(layer[:, val] <= 0):
        raise DomainViolation("non-positive values on the new layer")


def advance_heat_layer(state: MarchState, tau: float, policy: BoundaryPolicy | None = None) -> MarchState:
    """One step of the explicit invariant heat scheme on layer ``(x, t, u)``."""
    policy = policy or BoundaryPolicy.copy()
    L = state.layer
    if len(L) < 3:
        raise ValueError("a layer needs at least three nodes")
    x, u = L[:, 0], L[:, 2]
    if np.any(u <= 0):
        raise DomainViolation("heat scheme requires u > 0")
    dxh, rhs = heat_explicit(x[1:-1], x[2:], x[:-2], u[1:-1], u[2:], u[:-2], tau)
    uh = heat_amplitude(u[1:-1], dxh, rhs, tau)
    new = np.empty_like(L)
    new[1:-1, 0] = x[1:-1] + dxh
    new[1:-1, 2] = uh
    _endpoints(policy, state, new, tau, 0, 2)
    _check_layer(new, 0, 2, True)
    return MarchState(state.t + tau, state.m + 1, new, tau)


def advance_nonlinear_heat_layer(state: MarchState, tau: float, policy: BoundaryPolicy | None = None) -> MarchState:
    """One step of the nonlinear heat scheme on layer ``(y, t, v)``.

    The mesh equation moves ``v``; the amplitude equation gives ``ŷ``.
    """
    policy = policy or BoundaryPolicy.copy()
    L = state.layer
    if len(L) < 3:
        raise ValueError("a layer needs at least three nodes")
    y, v = L[:, 0], L[:, 2]
    if np.any(y <= 0):
        raise DomainViolation("nonlinear heat scheme requires y > 0")
    if np.any(np.diff(v) == 0):
        raise DomainViolation("v must be strictly monotone along the layer")
    dvh, rhs = nl_heat_explicit(v[1:-1], v[2:], v[:-2], y[1:-1], y[2:], y[:-2], tau)
    yh = heat_amplitude(y[1:-1], dvh, rhs, tau)
    new = np.empty_like(L)
    new[1:-1, 2] = v[1:-1] + dvh
    new[1:-1, 0] = yh
    _endpoints(policy, state, new, tau, 2, 0)
    _check_layer(new, 2, 0, True)
    return MarchState(state.t + tau, state.m + 1, new, tau)


@dataclass
class MarchResult:
    grid: SolutionGrid
    taus: list = field(default_factory=list)
    halvings: int = 0

    def manifest(self):
        return {"layers": len(self.taus) + 1, "taus": self.taus, "halvings": self.halvings}


def _march(advance, layer, t0, tau, n_steps, policy, max_halvings, names, pos):
    state = MarchState(t0, 0, layer)
    layers, taus, halvings = [state.layer], [], 0
    while len(taus) < n_steps:
        try:
            state = advance(state, tau, policy)
        except StepTooLarge:
            if halvings >= max_halvings:
                raise
            halvings += 1
            tau /= 2
            warnings.warn(f"step too large, halving to {tau:g}", stacklevel=3)
            continue
        layers.append(state.layer)
        taus.append(tau)
    grid = SolutionGrid(2, 1, np.stack(layers), names=names, flat_axis=1, monotone_axis=pos)
    return MarchResult(grid, taus, halvings)


def march_heat(x, u, t0, tau, n_steps, policy=None, max_halvings=4) -> MarchResult:
    """March the invariant heat scheme from the layer ``(x, u)`` at time ``t0``."""
    x, u = np.asarray(x, dtype=float), np.asarray(u, dtype=float)
    layer = np.stack([x, np.full_like(x, t0), u], -1)
    return _march(advance_heat_layer, layer, t0, tau, n_steps, policy, max_halvings, ("x", "t", "u"), 0)


def march_nonlinear_heat(y, v, t0, tau, n_steps, policy=None, max_halvings=4) -> MarchResult:
    """March the nonlinear heat scheme from the layer ``(y, v)`` at time ``t0``."""
    y, v = np.asarray(y, dtype=float), np.asarray(v, dtype=float)
    layer = np.stack([y, np.full_like(y, t0), v], -1)
    return _march(advance_nonlinear_heat_layer, layer, t0, tau, n_steps, policy, max_halvings, ("y", "t", "v"), 2)


# --------------------------------------------------------------------- wave


def march_wave(scheme: Scheme, initial_two_lines, n_steps: int, y0: float = 0.0, z0: float = 0.0) -> SolutionGrid:
    """Fill the characteristic lattice ``y = εn + y0``, ``z = -δm - z0`` from Goursat data.

    ``initial_two_lines = (first_layer, first_column)`` gives ``u`` on
    ``m = 0`` (length N) and on ``n = 0`` (length ``n_steps + 1``); they must
    agree at the corner. Each new value is

        û_+ = û + u_+ - u + Δŷ_+ Δẑ F(u)

    with ``Δŷ_+ = ε`` and ``Δẑ = -δ``. For the ``wave-xt`` scheme the grid
    is mapped back to ``(x, t, u)`` by the inverse characteristic change of
    variables, giving the 45° lattice.
    """
    F = scheme.params.get("F")
    Ff = (lambda u: np.zeros(np.shape(u))) if F is None else (F if callable(F) else (lambda u, c=float(F): np.full(np.shape(u), c)))
    eps, delta = scheme.params["eps"], scheme.params["delta"]
    first_layer, first_column = (np.asarray(a, dtype=float) for a in initial_two_lines)
    if len(first_column) != n_steps + 1:
        raise ValueError("first column must hold n_steps + 1 values")
    if first_layer[0] != first_column[0]:
        raise ValueError("the two initial lines disagree at the corner")
    M, N = n_steps + 1, len(first_layer)
    u = np.empty((M, N))
    u[0], u[:, 0] = first_layer, first_column
    for m in range(n_steps):
        # rows are filled left to right: each value needs its left neighbour
        Fm = Ff(u[m, :-1]) * (eps * -delta)
        row = u[m + 1]
        for n in range(N - 1):
            row[n + 1] = row[n] + u[m, n + 1] - u[m, n] + Fm[n]
    mm, nn = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
    yz = np.stack([eps * nn + y0, -delta * mm - z0, u], -1)
    if scheme.name == "wave-xt":
        return SolutionGrid(2, 1, characteristic().inverse(yz), names=("x", "t", "u"))
    return SolutionGrid(2, 1, yz, names=("y", "z", "u"))


# ------------------------------------------------------------------ elliptic


@dataclass(frozen=True)
class Annulus:
    """``r = r0 + εn`` for ``n = 0..N`` and ``θ = θ0 + δm`` for ``m = 0..M-1``, ``δ = 2π/M``."""

    r0: float
    eps: float
    N: int
    M: int
    theta0: float = 0.0

    @property
    def delta(self) -> float:
        return 2 * np.pi / self.M

    def mesh(self):
        m, n = np.meshgrid(np.arange(self.M), np.arange(self.N + 1), indexing="ij")
        return self.theta0 + self.delta * m, self.r0 + self.eps * n


@dataclass
class EllipticResult:
    grid: SolutionGrid
    iterations: int
    max_update: float
    max_residual: float

    def manifest(self):
        return {"iterations": self.iterations, "max_update": self.max_update, "max_residual": self.max_residual}


def _polar_F(F):
    if F is None:
        return lambda u, r: np.zeros(np.shape(u))
    if not callable(F):
        return lambda u, r, c=float(F): np.full(np.shape(u), c)
    return F


def solve_elliptic(scheme: Scheme, annulus: Annulus, boundary_data, max_iters: int = 5000, tol: float = 1e-10, omega=None) -> EllipticResult:
    """Solve the polar five-point scheme on a closed annulus.

    Dirichlet data at ``n = 0`` and ``n = N`` come from ``boundary_data``,
    either a callable ``(r, θ) -> u`` or a pair of arrays (inner, outer)
    over the M angles. Red-black successive over-relaxation sweeps with
    ``F`` lagged by one sweep; converged when the largest update is below
    ``tol`` and the residual, divided by the diagonal coefficient, is below
    ``10·tol`` at every interior node.
    """
    if annulus.M % 2:
        raise ValueError("red-black ordering needs an even number of angles")
    F = _polar_F(scheme.params.get("F"))
    eps, delta = annulus.eps, annulus.delta
    if abs(scheme.params.get("eps", eps) - eps) > 1e-15 or abs(scheme.params.get("delta", delta) - delta) > 1e-12:
        raise ValueError("scheme steps do not match the annulus")
    th, r = annulus.mesh()
    u = np.zeros_like(r)
    if callable(boundary_data):
        u[:, 0] = boundary_data(r[:, 0], th[:, 0])
        u[:, -1] = boundary_data(r[:, -1], th[:, -1])
    else:
        inner, outer = boundary_data
        u[:, 0], u[:, -1] = inner, outer
    u[:, 1:-1] = np.linspace(0, 1, annulus.N + 1)[1:-1] * (u[:, -1:] - u[:, :1]) + u[:, :1]
    ri = r[:, 1:-1]
    cp = 1 / eps**2 + 1 / (ri * eps)
    cm = 1 / eps**2
    ca = 1 / (ri**2 * delta**2)
    diag = 2 / eps**2 + 1 / (ri * eps) + 2 / (ri**2 * delta**2)
    if omega is None:
        omega = 2 / (1 + np.sin(np.pi / annulus.N))
    mm, nn = np.meshgrid(np.arange(annulus.M), np.arange(1, annulus.N), indexing="ij")
    colours = [(mm + nn) % 2 == 0, (mm + nn) % 2 == 1]

    def residual(u):
        c = u[:, 1:-1]
        return (
            cp * u[:, 2:] + cm * u[:, :-2] + ca * (np.roll(c, -1, 0) + np.roll(c, 1, 0)) - diag * c - F(c, ri)
        )

    max_update = np.inf
    for it in range(1, max_iters + 1):
        Fv = F(u[:, 1:-1], ri)
        max_update = 0.0
        for mask in colours:
            c = u[:, 1:-1]
            gs = (cp * u[:, 2:] + cm * u[:, :-2] + ca * (np.roll(c, -1, 0) + np.roll(c, 1, 0)) - Fv) / diag
            upd = omega * (gs - c) * mask
            u[:, 1:-1] += upd
            max_update = max(max_update, float(np.max(np.abs(upd))))
        if max_update < tol:
            max_res = float(np.max(np.abs(residual(u) / diag)))
            if max_res < 10 * tol:
                grid = SolutionGrid(2, 1, np.stack([r, th, u], -1), names=("r", "theta", "u"), periodic=(0,))
                return EllipticResult(grid, it, max_update, max_res)
    max_res = float(np.max(np.abs(residual(u) / diag)))
    raise NotConverged(max_iters, max_update, max_res)


def to_cartesian(grid: SolutionGrid) -> SolutionGrid:
    """Map a polar lattice ``(r, θ, u)`` to ``(x, y, u)``."""
    return SolutionGrid(2, 1, polar().forward(grid.coords), names=("x", "y", "u"), periodic=grid.periodic)


def interior_residuals(scheme: Scheme, grid: SolutionGrid) -> np.ndarray:
    """Scheme residuals at every node whose stencil lies in the grid."""
    return residuals(scheme, build_stencils(grid, interior_bases(grid, scheme.template), scheme.template))


__all__ = [
    "Annulus",
    "BoundaryPolicy",
    "EllipticResult",
    "MarchResult",
    "MarchState",
    "advance_heat_layer",
    "advance_nonlinear_heat_layer",
    "interior_residuals",
    "march_heat",
    "march_nonlinear_heat",
    "march_ode",
    "march_wave",
    "solve_elliptic",
    "to_cartesian",
]
