"""
Invertible point transformations and what they transport.

A transformation ``psi`` acts pointwise on ``(x, u)``. Pushing a stencil,
an invariant, a residual or an exact solution forward is composition with
``psi`` or ``psi^{-1}``; pushing a vector field forward is multiplication by
the Jacobian. No formula is rewritten symbolically, so a pushed scheme
evaluated at ``psi(c)`` reproduces the original residuals at ``c`` along the
same arithmetic path.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import JacobianUnavailable, OutsideChart
from .lie import SymmetryAlgebra, VectorField, flow
from .stencil import SolutionGrid, StencilConfig


def _always(pts):
    return np.ones(np.shape(pts)[:-1], dtype=bool)


@dataclass(frozen=True)
class PointTransformation:
    """``psi: (x, u) -> (x~, u~)`` with its inverse.

    ``jacobian`` returns ``(..., p+q, p+q)`` matrices ``d psi`` at source
    points; ``inverse_jacobian`` the same for ``psi^{-1}`` at target points.
    ``names`` are the coordinate names of the target chart.
    """

    name: str
    p: int
    q: int
    forward: Callable
    inverse: Callable
    jacobian: Callable | None = None
    inverse_jacobian: Callable | None = None
    domain: Callable = _always
    target_domain: Callable = _always
    names: tuple = ()

    def inverted(self) -> "PointTransformation":
        return PointTransformation(
            f"{self.name}^-1",
            self.p,
            self.q,
            self.inverse,
            self.forward,
            self.inverse_jacobian,
            self.jacobian,
            self.target_domain,
            self.domain,
        )

    def with_names(self, names) -> "PointTransformation":
        return replace(self, names=tuple(names))


def _guarded(fn, guard, pts, what):
    pts = np.asarray(pts, dtype=float)
    ok = guard(pts)
    if not np.all(ok):
        bad = np.argwhere(~np.atleast_1d(ok))
        raise OutsideChart(f"{what}: point(s) {bad[:3].tolist()} outside the chart")
    return np.asarray(fn(pts), dtype=float)


def apply(psi: PointTransformation, pt) -> np.ndarray:
    return _guarded(psi.forward, psi.domain, pt, psi.name)


def apply_inverse(psi: PointTransformation, pt) -> np.ndarray:
    return _guarded(psi.inverse, psi.target_domain, pt, f"{psi.name}^-1")


def pushforward_stencil(psi: PointTransformation, config: StencilConfig, template=None) -> StencilConfig:
    """Map every stencil point by ``psi``; the offsets are never re-indexed."""
    ok = psi.domain(config.coords)
    if not np.all(ok):
        bad = np.argwhere(~np.atleast_1d(ok))[0]
        label = config.template.labels[int(bad[-1])]
        raise OutsideChart(f"{psi.name}: stencil point {label!r} outside the chart")
    tpl = template or (config.template.with_names(psi.names) if psi.names else config.template)
    return StencilConfig(tpl, psi.forward(config.coords))


def pushforward_invariant(psi: PointTransformation, I: Callable, template=None) -> Callable:
    """``I~(c~) = I(psi^{-1}(c~))``."""
    inv = psi.inverted()

    def pushed(config):
        return I(pushforward_stencil(inv, config, template))

    pushed.__name__ = f"{psi.name}*{getattr(I, '__name__', 'I')}"
    return pushed


def _fd_jacobian(fn, pts, h=1e-6):
    pts = np.asarray(pts, dtype=float)
    d = pts.shape[-1]
    cols = []
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        cols.append((fn(pts + e) - fn(pts - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def conjugate_field(psi: PointTransformation, v: VectorField, allow_fd: bool = True) -> VectorField:
    """Push ``v`` forward: ``(d psi · v)(psi^{-1}(x~, u~))``.

    The flow of the result is ``psi ∘ exp(ε v) ∘ psi^{-1}``.
    """
    jac = psi.jacobian
    if jac is None:
        if not allow_fd:
            raise JacobianUnavailable(psi.name)
        warnings.warn(f"{psi.name} has no Jacobian; conjugating {v.name} with finite differences", stacklevel=2)
        jac = lambda pts: _fd_jacobian(psi.forward, pts)  # noqa: E731

    def evaluate(pts):
        src = psi.inverse(np.asarray(pts, dtype=float))
        return np.einsum("...ij,...j->...i", jac(src), v(src))

    domain = None
    if v.domain is not None:
        domain = lambda pts: v.domain(psi.inverse(pts))  # noqa: E731
    return VectorField(f"{psi.name}*{v.name}", v.p, v.q, evaluate, domain)


def conjugate_algebra(psi: PointTransformation, algebra: SymmetryAlgebra) -> SymmetryAlgebra:
    return SymmetryAlgebra(tuple(conjugate_field(psi, v) for v in algebra), algebra.p, algebra.q, f"{psi.name}*{algebra.name}")


def conjugation_defect(psi, v, pts, eps) -> float:
    """``max |flow(psi_* v, psi(pt), ε) - psi(flow(v, pt, ε))|``."""
    lhs = flow(conjugate_field(psi, v), psi.forward(pts), eps)
    rhs = psi.forward(flow(v, pts, eps))
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class ExactSolution:
    """Lattice and solution values jointly: ``lattice(*index) -> points (..., p+q)``."""

    name: str
    p: int
    q: int
    lattice: Callable
    names: tuple = ()

    def sample(self, *index) -> np.ndarray:
        return np.asarray(self.lattice(*[np.asarray(i) for i in index]), dtype=float)

    def grid(self, *ranges, **kwargs) -> SolutionGrid:
        mesh = np.meshgrid(*[np.asarray(r) for r in ranges], indexing="ij")
        return SolutionGrid(self.p, self.q, self.sample(*mesh), names=self.names, **kwargs)


def pushforward_solution(psi: PointTransformation, sol: ExactSolution) -> ExactSolution:
    """Transported solution ``u~ = psi|_u ∘ f ∘ psi^{-1}|_x`` on the transported lattice."""

    def lattice(*index):
        return apply(psi, sol.lattice(*index))

    return ExactSolution(f"{psi.name}*{sol.name}", sol.p, sol.q, lattice, psi.names or sol.names)


# ---------------------------------------------------------- built-in charts


def identity(p: int = 1, q: int = 1) -> PointTransformation:
    eye = lambda pts: np.broadcast_to(np.eye(p + q), np.shape(pts)[:-1] + (p + q, p + q))  # noqa: E731
    return PointTransformation("identity", p, q, lambda a: np.array(a, dtype=float), lambda a: np.array(a, dtype=float), eye, eye)


def hodograph(p: int = 1) -> PointTransformation:
    """Pure hodograph ``(x^1, ..., x^p, u) -> (u, x^2, ..., x^p, x^1)``; an involution."""
    d = p + 1
    perm = np.arange(d)
    perm[0], perm[-1] = d - 1, 0
    mat = np.eye(d)[perm]

    def swap(pts):
        return np.asarray(pts, dtype=float)[..., perm]

    def jac(pts):
        return np.broadcast_to(mat, np.shape(pts)[:-1] + (d, d))

    names = ("y", "v") if p == 1 else ("y", "t", "v")
    return PointTransformation("hodograph", p, 1, swap, swap, jac, jac, names=names)


def characteristic() -> PointTransformation:
    """``(x, t, u) -> (y, z, u) = (x + t, x - t, u)``."""
    a = np.array([[1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
    ainv = np.array([[0.5, 0.5, 0.0], [0.5, -0.5, 0.0], [0.0, 0.0, 1.0]])

    def fwd(pts):
        return np.asarray(pts, dtype=float) @ a.T

    def inv(pts):
        return np.asarray(pts, dtype=float) @ ainv.T

    def jac(pts):
        return np.broadcast_to(a, np.shape(pts)[:-1] + (3, 3))

    def ijac(pts):
        return np.broadcast_to(ainv, np.shape(pts)[:-1] + (3, 3))

    return PointTransformation("characteristic", 2, 1, fwd, inv, jac, ijac, names=("y", "z", "u"))


def wrap_angle(a):
    """Map angles to ``(-π, π]``."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def polar() -> PointTransformation:
    """Polar chart to cartesian: ``(r, θ, u) -> (r cos θ, r sin θ, u)``.

    The inverse uses the two-argument arctangent, so θ lands in ``(-π, π]``.
    """

    def fwd(pts):
        r, th, u = np.moveaxis(np.asarray(pts, dtype=float), -1, 0)
        return np.stack([r * np.cos(th), r * np.sin(th), u], axis=-1)

    def inv(pts):
        x, y, u = np.moveaxis(np.asarray(pts, dtype=float), -1, 0)
        return np.stack([np.hypot(x, y), np.arctan2(y, x), u], axis=-1)

    def jac(pts):
        r, th, _ = np.moveaxis(np.asarray(pts, dtype=float), -1, 0)
        c, s = np.cos(th), np.sin(th)
        z, o = np.zeros_like(r), np.ones_like(r)
        return np.stack(
            [np.stack([c, -r * s, z], -1), np.stack([s, r * c, z], -1), np.stack([z, z, o], -1)], axis=-2
        )

    def ijac(pts):
        x, y, _ = np.moveaxis(np.asarray(pts, dtype=float), -1, 0)
        r2 = x * x + y * y
        r = np.sqrt(r2)
        z, o = np.zeros_like(x), np.ones_like(x)
        return np.stack(
            [np.stack([x / r, y / r, z], -1), np.stack([-y / r2, x / r2, z], -1), np.stack([z, z, o], -1)], axis=-2
        )

    def domain(pts):
        return np.asarray(pts)[..., 0] > 0

    def target_domain(pts):
        pts = np.asarray(pts)
        return np.hypot(pts[..., 0], pts[..., 1]) > 0

    return PointTransformation("polar", 2, 1, fwd, inv, jac, ijac, domain, target_domain, names=("x", "y", "u"))


TRANSFORMS = {
    "identity": lambda p=2: identity(p),
    "hodograph": lambda p=2: hodograph(p),
    "characteristic": lambda p=2: characteristic(),
    "polar": lambda p=2: polar(),
}


def get_transform(name: str, p: int = 2) -> PointTransformation:
    try:
        return TRANSFORMS[name](p)
    except KeyError:
        raise KeyError(f"unknown transformation {name!r}; choose from {sorted(TRANSFORMS)}") from None


# ------------------------------------------------------------------ schemes


def pushforward_scheme(psi: PointTransformation, scheme, template=None, name: str | None = None):
    """Transport a scheme: every residual is composed with ``psi^{-1}`` pointwise.

    The algebra is conjugated, the zero-set sampler is mapped by ``psi`` and
    the continuum residual is composed like the residuals. ``template`` sets
    the stencil template of the new chart (needed when flat-layer ties refer
    to coordinates that ``psi`` mixes).
    """
    src = scheme.template
    tpl = template or (src.with_names(psi.names) if psi.names else src)
    equations = tuple(pushforward_invariant(psi, E, src) for E in scheme.equations)
    sampler = None
    if scheme.sampler is not None:
        base_sampler = scheme.sampler

        def sampler(rng, n):
            return pushforward_stencil(psi, base_sampler(rng, n), tpl)

    continuum = None
    if scheme.continuum_residual is not None:
        continuum = pushforward_invariant(psi, scheme.continuum_residual, src)
    algebra = conjugate_algebra(psi, scheme.algebra) if scheme.algebra is not None else None
    return replace(
        scheme,
        name=name or f"{psi.name}*{scheme.name}",
        template=tpl,
        equations=equations,
        algebra=algebra,
        sampler=sampler,
        continuum_residual=continuum,
        step=None,
        provenance=scheme.provenance + (psi.name,),
    )


@dataclass
class DiagramReport:
    """Consistency orders on both sides of the transformation."""

    transformation: str
    source: object
    target: object
    threshold: float = 0.8
    max_functorial_gap: float | None = None

    @property
    def passed(self) -> bool:
        return all(_order_ok(e, self.threshold) for e in (self.source, self.target))

    def to_dict(self):
        d = {
            "transformation": self.transformation,
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "pass": self.passed,
        }
        if self.max_functorial_gap is not None:
            d["max_functorial_gap"] = self.max_functorial_gap
        return d


def _order_ok(est, threshold):
    return est.exact or (est.order is not None and est.order >= threshold)


def check_commuting_diagram(
    psi, scheme, probe, steps, target_scheme=None, target_probe=None, threshold: float = 0.8
) -> DiagramReport:
    """Measure the consistency order of ``scheme`` and of its image.

    ``probe(h)`` returns a stencil of a smooth (non-exact) solution at step
    ``h``. On the target side the hand-coded ``target_scheme`` and a probe of
    the transformed solution are used when given; otherwise the pushed scheme
    and the mapped probe. When both a hand-coded target and the pushed scheme
    exist, their largest disagreement on the target probes is recorded.
    """
    from .schemes import consistency_order, residuals

    pushed = pushforward_scheme(psi, scheme, template=getattr(target_scheme, "template", None))
    tgt = target_scheme or pushed
    if target_probe is None:
        tpl = tgt.template

        def target_probe(h):
            return pushforward_stencil(psi, probe(h), tpl)

    src_est = consistency_order(scheme, probe, steps)
    tgt_est = consistency_order(tgt, target_probe, steps)
    gap = None
    if target_scheme is not None:
        gap = max(float(np.max(np.abs(residuals(tgt, target_probe(h)) - residuals(pushed, target_probe(h))))) for h in steps)
    return DiagramReport(psi.name, src_est, tgt_est, threshold, gap)
