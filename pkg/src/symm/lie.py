"""
Vector fields, discrete prolongation and invariance verification.

A :class:`VectorField` evaluates its coefficients ``(xi, phi)`` on arrays of
points of shape ``(..., p+q)``. Its discrete prolongation evaluates the same
coefficients independently at every point of a stencil. Group elements are
obtained by integrating the field's flow with an adaptive 8th-order
Runge-Kutta method, so every generator, including projective ones, is
treated the same way.

Infinitesimal checks differentiate black-box invariants and residuals by
central finite differences with per-slot relative steps.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import FlowEscapedDomain, RankUnstable, SamplerViolatesManifold, StepSizeUnderflow
from .stencil import StencilConfig, StencilTemplate

FLOW_RTOL = 1e-12
FLOW_ATOL = 1e-14
FD_STEP = 1e-7
RANK_RTOL = 1e-9
DEFAULT_EPS_SWEEP = (-0.2, -0.05, 0.05, 0.2)


class VectorField:
    """Infinitesimal generator ``Σ xi^i ∂_{x^i} + Σ phi^α ∂_{u^α}``.

    Parameters
    ----------
    name : str
    p, q : int
        Number of independent and dependent variables.
    evaluate : callable
        Maps points ``(..., p+q)`` to coefficients ``(..., p+q)``.
    domain : callable, optional
        Boolean predicate on points; flows leaving it raise FlowEscapedDomain.
    """

    def __init__(self, name: str, p: int, q: int, evaluate: Callable, domain: Callable | None = None):
        self.name = name
        self.p = p
        self.q = q
        self._evaluate = evaluate
        self.domain = domain

    @classmethod
    def from_components(cls, name, p, q, components, domain=None):
        """Build from ``components(*coords) -> (c_1, ..., c_{p+q})`` with scalar broadcasting."""

        def evaluate(pts):
            pts = np.asarray(pts, dtype=float)
            comps = components(*np.moveaxis(pts, -1, 0))
            return np.stack([np.broadcast_to(np.asarray(c, dtype=float), pts.shape[:-1]) for c in comps], axis=-1)

        return cls(name, p, q, evaluate, domain)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.asarray(self._evaluate(pts), dtype=float)

    def xi(self, pts):
        return self(pts)[..., : self.p]

    def phi(self, pts):
        return self(pts)[..., self.p:]

    def scaled(self, a: float, name: str | None = None) -> "VectorField":
        return VectorField(name or f"{a}*{self.name}", self.p, self.q, lambda pts: a * self(pts), self.domain)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(f"{self.name}+{other.name}", self.p, self.q, lambda pts: self(pts) + other(pts), self.domain)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(f"{self.name}-{other.name}", self.p, self.q, lambda pts: self(pts) - other(pts), self.domain)

    def __repr__(self):
        return f"VectorField({self.name!r}, p={self.p}, q={self.q})"


@dataclass(frozen=True)
class SymmetryAlgebra:
    """Basis ``{V_k}`` of a Lie algebra of point symmetries."""

    fields: tuple
    p: int
    q: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        for v in self.fields:
            if (v.p, v.q) != (self.p, self.q):
                raise ValueError(f"{v!r} does not act on a ({self.p},{self.q}) space")

    def __iter__(self):
        return iter(self.fields)

    def __len__(self):
        return len(self.fields)

    def __getitem__(self, k):
        return self.fields[k]

    @property
    def names(self):
        return [v.name for v in self.fields]


@dataclass(frozen=True)
class ProlongedField:
    """Discrete prolongation of ``base`` to every point of ``template``."""

    base: VectorField
    template: StencilTemplate

    def coefficients(self, config: StencilConfig) -> np.ndarray:
        """Coefficients in flattened slot order, shape ``(..., (p+q)·#J)``."""
        return self.base(config.coords).reshape(config.batch_shape + (self.template.dim,))

    def __call__(self, f: Callable, config: StencilConfig) -> np.ndarray:
        return directional_derivative(self, f, config)


def prolong(v: VectorField, template: StencilTemplate) -> ProlongedField:
    if (v.p, v.q) != (template.p, template.q):
        raise ValueError("field and template dimensions differ")
    return ProlongedField(v, template)


def _integrate(v: VectorField, y0: np.ndarray, eps: float) -> np.ndarray:
    shape = y0.shape
    width = v.p + v.q

    def rhs(_, y):
        return v(y.reshape(-1, width)).ravel()

    with np.errstate(all="ignore"):
        sol = solve_ivp(rhs, (0.0, eps), y0.ravel(), method="DOP853", rtol=FLOW_RTOL, atol=FLOW_ATOL)
    if sol.status != 0:
        if "step size" in sol.message.lower():
            raise StepSizeUnderflow(sol.message)
        raise FlowEscapedDomain(sol.message)
    out = sol.y[:, -1].reshape(shape)
    if not np.all(np.isfinite(out)):
        raise FlowEscapedDomain("flow produced non-finite coordinates")
    if v.domain is not None and not np.all(v.domain(out)):
        raise FlowEscapedDomain(f"flow of {v.name} left its domain")
    return out


def flow(v: VectorField, pt, eps: float) -> np.ndarray:
    """Advance points ``(..., p+q)`` along the integral curves of ``v`` for time ``eps``."""
    pt = np.array(pt, dtype=float)
    if eps == 0.0:
        return pt
    return _integrate(v, pt, float(eps))


def prolonged_flow(v: VectorField, config: StencilConfig, eps: float) -> StencilConfig:
    """Apply the group element ``exp(eps·v)`` to every point of the stencil."""
    return config.with_coords(flow(v, config.coords, eps))


def gradient(f: Callable, config: StencilConfig) -> np.ndarray:
    """Central-difference gradient of ``f`` in flattened slot order."""
    flat = np.array(config.flat)
    out = np.empty_like(flat)
    tpl = config.template
    for s in range(tpl.dim):
        h = np.maximum(FD_STEP, FD_STEP * np.abs(flat[..., s]))
        fp = flat.copy()
        fm = flat.copy()
        fp[..., s] += h
        fm[..., s] -= h
        # the realised step, not the requested one
        dh = fp[..., s] - fm[..., s]
        vp = np.asarray(f(StencilConfig.from_flat(tpl, fp)), dtype=float)
        vm = np.asarray(f(StencilConfig.from_flat(tpl, fm)), dtype=float)
        out[..., s] = (vp - vm) / dh
    return out


def directional_derivative(pv: ProlongedField, f: Callable, config: StencilConfig) -> np.ndarray:
    """Numeric ``pr V[f]`` at ``config``."""
    return np.sum(pv.coefficients(config) * gradient(f, config), axis=-1)


def z_matrix(algebra: SymmetryAlgebra, config: StencilConfig, effective: bool = False) -> np.ndarray:
    """Prolonged coefficients, one row per generator, shape ``(..., N, (p+q)·#J)``.

    With ``effective=True`` the columns of tied (flat-layer) slots are dropped.
    """
    tpl = config.template
    if len(algebra) == 0:
        z = np.zeros(config.batch_shape + (0, tpl.dim))
    else:
        z = np.stack([prolong(v, tpl).coefficients(config) for v in algebra], axis=-2)
    if effective:
        z = z[..., tpl.free_slots()]
    return z


def numerical_rank(z: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Count singular values above ``rtol·σ_max`` (batched)."""
    z = np.asarray(z, dtype=float)
    if z.shape[-2] == 0 or z.shape[-1] == 0:
        return np.zeros(z.shape[:-2], dtype=int)
    s = np.linalg.svd(z, compute_uv=False)
    smax = s[..., :1]
    return np.sum((s > rtol * smax) & (smax > 0), axis=-1)


def z_ranks(algebra, template, sampler, n_samples, rng) -> np.ndarray:
    config = sampler(rng, n_samples)
    if config.template.labels != template.labels:
        raise ValueError("sampler template does not match")
    return numerical_rank(z_matrix(algebra, config, effective=True))


def invariant_count(algebra, template, sampler, n_samples=100, rng=None, manifold_dim=None) -> int:
    """Number of functionally independent invariants, ``dim M - rank Z``.

    ``dim M`` defaults to the template's free dimension (flat-layer ties
    removed). Raises RankUnstable when generic samples disagree on the rank.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    dim_m = template.free_dim if manifold_dim is None else manifold_dim
    if len(algebra) == 0:
        return dim_m
    ranks = z_ranks(algebra, template, sampler, n_samples, rng)
    if len(set(ranks.tolist())) != 1:
        raise RankUnstable(ranks)
    return dim_m - int(ranks.max())


# ---------------------------------------------------------------- reports


@dataclass
class GeneratorResult:
    generator: str
    n_samples: int
    max_violation: float
    passed: bool
    witness: list | None = None
    escaped: int = 0
    note: str = ""

    def to_dict(self):
        d = {
            "generator": self.generator,
            "n_samples": self.n_samples,
            "max_violation": self.max_violation,
            "pass": self.passed,
        }
        if self.escaped:
            d["escaped"] = self.escaped
        if self.witness is not None and not self.passed:
            d["witness"] = self.witness
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class InvarianceReport:
    """Per-generator verdicts of one invariance check."""

    kind: str
    target: str
    tol: float
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def max_violation(self) -> float:
        return max((r.max_violation for r in self.results), default=0.0)

    def to_dict(self):
        return {
            "kind": self.kind,
            "target": self.target,
            "tol": self.tol,
            "pass": self.passed,
            "generators": [r.to_dict() for r in self.results],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.kind}[{self.target}] {status} max={self.max_violation:.2e} tol={self.tol:.0e}"


def _finite_max(values):
    values = np.abs(np.asarray(values, dtype=float))
    if values.size == 0:
        return 0.0, None
    if not np.all(np.isfinite(values)):
        k = int(np.flatnonzero(~np.isfinite(values))[0])
        return float("inf"), k
    k = int(np.argmax(values))
    return float(values[k]), k


def _fname(f, default="f"):
    return getattr(f, "__name__", default)


def check_strong_invariance(f, algebra, sampler, n_samples=200, tol=1e-6, rng=None, name=None) -> InvarianceReport:
    """``pr V_k[f] = 0`` at generic samples, for every generator."""
    rng = np.random.default_rng(0) if rng is None else rng
    config = sampler(rng, n_samples)
    grad = gradient(f, config)
    report = InvarianceReport("strong", name or _fname(f), tol)
    for v in algebra:
        dv = np.sum(prolong(v, config.template).coefficients(config) * grad, axis=-1)
        worst, k = _finite_max(dv)
        witness = None if k is None else config.coords[k].tolist()
        report.results.append(GeneratorResult(v.name, n_samples, worst, worst < tol, witness))
    return report


def check_weak_invariance(
    E, algebra, manifold_sampler, n_samples=200, tol=1e-6, rng=None, name=None, manifold_tol=1e-12, off_manifold_sampler=None
) -> InvarianceReport:
    """``pr V_k[E] = 0`` restricted to samples on ``E = 0``.

    The sampler must place every sample on the manifold (``|E| < manifold_tol``);
    otherwise SamplerViolatesManifold is raised. With ``off_manifold_sampler``
    the off-manifold maximum is recorded in each result's note, never judged.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    config = manifold_sampler(rng, n_samples)
    values = np.abs(np.asarray(E(config), dtype=float))
    if not np.all(values < manifold_tol):
        k = int(np.argmax(values))
        raise SamplerViolatesManifold(f"sample {k} has |E| = {values[k]:.3e}")
    grad = gradient(E, config)
    off = off_grad = None
    if off_manifold_sampler is not None:
        off = off_manifold_sampler(rng, n_samples)
        off_grad = gradient(E, off)
    report = InvarianceReport("weak", name or _fname(E), tol)
    for v in algebra:
        dv = np.sum(prolong(v, config.template).coefficients(config) * grad, axis=-1)
        worst, k = _finite_max(dv)
        note = ""
        if off is not None:
            dv_off = np.sum(prolong(v, off.template).coefficients(off) * off_grad, axis=-1)
            note = f"off-manifold max {_finite_max(dv_off)[0]:.3e}"
        witness = None if k is None else config.coords[k].tolist()
        report.results.append(GeneratorResult(v.name, n_samples, worst, worst < tol, witness, note=note))
    return report


def _flow_batch(v, config, eps):
    """Flow every sample; samples whose flow fails are returned as NaN."""
    try:
        return prolonged_flow(v, config, eps).coords, 0
    except FlowEscapedDomain:
        out = np.full(config.coords.shape, np.nan)
        escaped = 0
        for k in range(len(config)):
            try:
                out[k] = flow(v, config.coords[k], eps)
            except FlowEscapedDomain:
                escaped += 1
        return out, escaped


def check_finite_invariance(
    f, algebra, sampler, eps_sweep=DEFAULT_EPS_SWEEP, n_samples=50, tol=1e-9, rng=None, name=None
) -> InvarianceReport:
    """``f(pr g·c) = f(c)`` for ``g = exp(ε V_k)`` over an ε sweep.

    ``f`` may be vector valued; the violation is the max-norm of the change.
    Samples whose flow escapes the domain are counted, not judged.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    config = sampler(rng, n_samples)
    base = np.asarray(f(config), dtype=float)
    report = InvarianceReport("finite", name or _fname(f), tol)
    for v in algebra:
        worst, witness, escaped = 0.0, None, 0
        for eps in eps_sweep:
            moved, esc = _flow_batch(v, config, eps)
            escaped += esc
            ok = np.all(np.isfinite(moved.reshape(len(config), -1)), axis=-1)
            if not np.any(ok):
                continue
            moved_cfg = StencilConfig(config.template, moved[ok])
            change = np.abs(np.asarray(f(moved_cfg), dtype=float) - base[ok])
            change = change.reshape(change.shape[0], -1).max(axis=-1) if change.ndim > 1 else change
            w, k = _finite_max(change)
            if w > worst or witness is None:
                worst, witness = w, {"eps": eps, "sample": config.coords[ok][k].tolist()}
        report.results.append(GeneratorResult(v.name, n_samples, worst, worst < tol, witness, escaped))
    return report


def check_zero_set_preservation(
    residuals, algebra, sampler, eps_sweep=DEFAULT_EPS_SWEEP, n_samples=50, tol=1e-7, rng=None, name="scheme"
) -> InvarianceReport:
    """Flows of every generator map zeros of ``residuals`` to zeros.

    Unlike :func:`check_finite_invariance` the residuals are compared with
    zero, not with their value before the flow.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    config = sampler(rng, n_samples)
    report = InvarianceReport("zero-set", name, tol)
    for v in algebra:
        worst, witness, escaped = 0.0, None, 0
        for eps in eps_sweep:
            moved, esc = _flow_batch(v, config, eps)
            escaped += esc
            ok = np.all(np.isfinite(moved.reshape(len(config), -1)), axis=-1)
            if not np.any(ok):
                continue
            r = np.asarray(residuals(StencilConfig(config.template, moved[ok])), dtype=float)
            w, k = _finite_max(np.max(np.abs(r), axis=-1))
            if w > worst or witness is None:
                worst, witness = w, {"eps": eps, "sample": config.coords[ok][k].tolist()}
        report.results.append(GeneratorResult(v.name, n_samples, worst, worst < tol, witness, escaped))
    return report


def commutator(v: VectorField, w: VectorField, h: float = 1e-6) -> VectorField:
    """Lie bracket ``[v, w]`` by central differences (test helper)."""

    def evaluate(pts):
        pts = np.asarray(pts, dtype=float)
        a, b = v(pts), w(pts)
        out = np.zeros_like(pts)
        for k in range(pts.shape[-1]):
            e = np.zeros(pts.shape[-1])
            e[k] = h
            dw = (w(pts + e) - w(pts - e)) / (2 * h)
            dv = (v(pts + e) - v(pts - e)) / (2 * h)
            out += a[..., k : k + 1] * dw - b[..., k : k + 1] * dv
        return out

    return VectorField(f"[{v.name},{w.name}]", v.p, v.q, evaluate)
