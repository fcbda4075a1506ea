"""
Discrete points, stencils and lattices
======================================

A stencil is a finite set of lattice points ``{(x_{m+j}, u_{m+j})}`` labelled
by integer offsets ``j``. Every point is stored as one row
``[x^1, ..., x^p, u^1, ..., u^q]`` and a configuration keeps its rows in
template order, so the flattened coordinate vector reads
``(x_0, u_0, x_1, u_1, ...)``. The Z matrix and every finite-difference
gradient rely on this ordering.

Configurations may carry leading batch dimensions: ``coords`` has shape
``(..., #J, p+q)`` and all formulas in the package broadcast over them.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MeshTangled, MissingLabel, MissingNeighbor

# labels of the notation block: base, n-neighbours, m-neighbours
ZERO, PLUS, MINUS, HAT, CHECK, HAT_PLUS = "0", "+", "-", "hat", "check", "hat+"


@dataclass(frozen=True)
class StencilTemplate:
    """Ordered, labelled offsets in ``Z^p``.

    ``ties`` lists slots fixed by a flat-layer convention as
    ``(label, coordinate index, source label)``: the coordinate of ``label``
    equals that of ``source label``. They only reduce the manifold dimension
    and select the columns of the effective Z matrix.
    """

    offsets: tuple
    labels: tuple
    p: int
    q: int = 1
    names: tuple = ()
    ties: tuple = ()

    def __post_init__(self):
        offsets = tuple(tuple(int(k) for k in o) for o in self.offsets)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(offsets) != len(self.labels):
            raise ValueError("one label per offset")
        if len(set(offsets)) != len(offsets):
            raise ValueError("offsets must be pairwise distinct")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be pairwise distinct")
        dims = {len(o) for o in offsets}
        if len(dims) != 1:
            raise ValueError("offsets must share one length")
        if (0,) * dims.pop() not in offsets:
            raise ValueError("the zero offset must belong to the template")
        if not self.names:
            xs = ("x",) if self.p == 1 else tuple(f"x{i + 1}" for i in range(self.p))
            us = ("u",) if self.q == 1 else tuple(f"u{i + 1}" for i in range(self.q))
            object.__setattr__(self, "names", xs + us)
        if len(self.names) != self.p + self.q:
            raise ValueError("need p+q coordinate names")
        for label, coord, source in self.ties:
            self.index(label), self.index(source)
            if not 0 <= coord < self.p + self.q:
                raise ValueError(f"bad tied coordinate {coord}")

    @property
    def size(self) -> int:
        return len(self.offsets)

    @property
    def width(self) -> int:
        """Coordinates per point, ``p+q``."""
        return self.p + self.q

    @property
    def dim(self) -> int:
        """Length of the flattened coordinate vector, ``(p+q)·#J``."""
        return self.size * self.width

    @property
    def free_dim(self) -> int:
        return self.dim - len(self.ties)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise MissingLabel(label) from None

    def offset(self, label: str) -> tuple:
        return self.offsets[self.index(label)]

    def slot(self, label: str, coord: int) -> int:
        """Position of one coordinate in the flattened vector."""
        return self.index(label) * self.width + coord

    def slot_names(self) -> list:
        return [f"{n}[{lab}]" for lab in self.labels for n in self.names]

    def free_slots(self) -> list:
        tied = {self.slot(lab, c) for lab, c, _ in self.ties}
        return [s for s in range(self.dim) if s not in tied]

    def with_names(self, names) -> "StencilTemplate":
        return StencilTemplate(self.offsets, self.labels, self.p, self.q, tuple(names), self.ties)


def template_1d(labels: Sequence[str] = (ZERO, PLUS), names=("x", "u")) -> StencilTemplate:
    table = {ZERO: (0,), PLUS: (1,), MINUS: (-1,)}
    return StencilTemplate(tuple(table[lab] for lab in labels), tuple(labels), p=1, names=names)


def template_2d(labels: Sequence[str], names=("x", "t", "u"), ties=()) -> StencilTemplate:
    """Two-index template with offsets ``(m, n)``: ``±`` move in n, hat/check in m."""
    table = {
        ZERO: (0, 0),
        PLUS: (0, 1),
        MINUS: (0, -1),
        HAT: (1, 0),
        CHECK: (-1, 0),
        HAT_PLUS: (1, 1),
    }
    return StencilTemplate(tuple(table[lab] for lab in labels), tuple(labels), p=2, names=names, ties=ties)


@dataclass(frozen=True, eq=False)
class StencilConfig:
    """Points of a stencil, one row per template offset (optionally batched)."""

    template: StencilTemplate
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        t = self.template
        if c.shape[-2:] != (t.size, t.width):
            raise ValueError(f"coords must end with shape {(t.size, t.width)}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_points(cls, template: StencilTemplate, points: Mapping[str, Sequence[float]]):
        rows = []
        for lab in template.labels:
            if lab not in points:
                raise MissingLabel(lab)
            rows.append(np.asarray(points[lab], dtype=float))
        return cls(template, np.stack(np.broadcast_arrays(*rows), axis=-2))

    @classmethod
    def from_flat(cls, template: StencilTemplate, flat) -> "StencilConfig":
        flat = np.asarray(flat, dtype=float)
        return cls(template, flat.reshape(flat.shape[:-1] + (template.size, template.width)))

    @property
    def batch_shape(self) -> tuple:
        return self.coords.shape[:-2]

    @property
    def p(self) -> int:
        return self.template.p

    @property
    def q(self) -> int:
        return self.template.q

    @property
    def flat(self) -> np.ndarray:
        return self.coords.reshape(self.batch_shape + (self.template.dim,))

    def point(self, label: str) -> np.ndarray:
        return self.coords[..., self.template.index(label), :]

    __getitem__ = point

    def x(self, label: str) -> np.ndarray:
        return self.point(label)[..., : self.p]

    def u(self, label: str) -> np.ndarray:
        return self.point(label)[..., self.p:]

    def coord(self, label: str, k: int) -> np.ndarray:
        return self.coords[..., self.template.index(label), k]

    def unpack(self, label: str) -> tuple:
        """Coordinates of one point as separate arrays, e.g. ``x, t, u``."""
        pt = self.point(label)
        return tuple(pt[..., k] for k in range(self.template.width))

    def with_coords(self, coords) -> "StencilConfig":
        return StencilConfig(self.template, coords)

    def replace(self, label: str, k: int, value) -> "StencilConfig":
        c = np.array(self.coords)
        c[..., self.template.index(label), k] = value
        return StencilConfig(self.template, c)

    def take(self, idx) -> "StencilConfig":
        """Select batch members."""
        return StencilConfig(self.template, self.coords[idx])

    def __len__(self):
        if not self.batch_shape:
            raise TypeError("unbatched configuration has no length")
        return self.batch_shape[0]

    def __repr__(self):
        return f"StencilConfig(labels={self.template.labels}, batch={self.batch_shape})"


def concat(configs: Iterable[StencilConfig]) -> StencilConfig:
    configs = list(configs)
    return StencilConfig(configs[0].template, np.concatenate([c.coords for c in configs], axis=0))


def steps(config: StencilConfig, which: Sequence[str] | None = None) -> dict:
    """Step vectors of the independent variables.

    ``"+"``: ``x_+ - x``, ``"-"``: ``x - x_-``, ``"hat"``: ``x̂ - x``,
    ``"check"``: ``x - x̌``, ``"hat+"``: ``x̂_+ - x̂``. Each value has shape
    ``(..., p)``. Without ``which`` every step whose labels are present is
    returned; requesting one whose labels are absent raises MissingLabel.
    """
    labels = set(config.template.labels)
    rules = {
        PLUS: (PLUS, ZERO),
        MINUS: (ZERO, MINUS),
        HAT: (HAT, ZERO),
        CHECK: (ZERO, CHECK),
        HAT_PLUS: (HAT_PLUS, HAT),
    }
    if which is None:
        which = [k for k, (a, b) in rules.items() if a in labels and b in labels]
    out = {}
    for key in which:
        if key not in rules:
            raise MissingLabel(key)
        a, b = rules[key]
        out[key] = config.x(a) - config.x(b)
    return out


@dataclass(frozen=True, eq=False)
class SolutionGrid:
    """Lattice points indexed by ``(m,)`` or ``(m, n)``.

    ``coords`` has shape ``index_shape + (p+q,)``. ``flat_axis`` names a
    coordinate that must be constant across each m-layer and
    ``monotone_axis`` one that must increase strictly along n.
    ``periodic`` marks index axes that wrap around.
    """

    p: int
    q: int
    coords: np.ndarray
    names: tuple = ()
    flat_axis: int | None = None
    monotone_axis: int | None = None
    periodic: tuple = ()

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.shape[-1] != self.p + self.q:
            raise ValueError("last axis of coords must have length p+q")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        if not self.names:
            object.__setattr__(self, "names", StencilTemplate(((0,),), ("0",), self.p, self.q).names)
        self.validate()

    @property
    def index_shape(self) -> tuple:
        return self.coords.shape[:-1]

    @property
    def ndim(self) -> int:
        return len(self.index_shape)

    def validate(self, tol: float = 1e-12):
        c = self.coords
        if self.ndim == 2 and self.flat_axis is not None:
            layer = c[..., self.flat_axis]
            spread = np.max(np.abs(layer - layer[:, :1]), axis=1)
            if np.any(spread > tol * np.maximum(1.0, np.abs(layer[:, 0]))):
                raise MeshTangled("time layer is not flat")
        if self.monotone_axis is not None:
            along = c[..., self.monotone_axis]
            d = np.diff(along, axis=-1)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise MeshTangled("layer coordinates are not strictly monotone")

    def __getitem__(self, idx):
        return self.coords[idx]

    def with_coords(self, coords) -> "SolutionGrid":
        return SolutionGrid(self.p, self.q, coords, self.names, self.flat_axis, self.monotone_axis, self.periodic)

    def to_csv(self, target=None, extra: Mapping[str, np.ndarray] | None = None) -> str:
        """Write one row per point with columns ``m[,n],<coordinate names>``."""
        return grid_to_csv(self.coords, self.names, target, extra)

    @classmethod
    def from_csv(cls, source, p: int, q: int = 1, **kwargs) -> "SolutionGrid":
        text = source if isinstance(source, str) and "\n" in source else open(source).read()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        nidx = 2 if "n" in header else 1
        idx = np.array([[int(v) for v in r[:nidx]] for r in body])
        vals = np.array([[float(v) for v in r[nidx : nidx + p + q]] for r in body])
        shape = tuple(idx.max(axis=0) - idx.min(axis=0) + 1)
        coords = np.empty(shape + (p + q,))
        coords[tuple((idx - idx.min(axis=0)).T)] = vals
        return cls(p, q, coords, tuple(header[nidx : nidx + p + q]), **kwargs)


def grid_to_csv(coords, names, target=None, extra=None) -> str:
    coords = np.asarray(coords)
    index_shape = coords.shape[:-1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    idx_names = ["m", "n"][: len(index_shape)]
    extra = dict(extra or {})
    w.writerow(idx_names + list(names) + list(extra))
    for idx in np.ndindex(*index_shape):
        vals = [coords[idx + (k,)] for k in range(coords.shape[-1])]
        vals += [np.asarray(v)[idx] for v in extra.values()]
        w.writerow(list(idx) + [format(float(v), ".17g") for v in vals])
    text = buf.getvalue()
    if target is not None:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _resolve(grid: SolutionGrid, index: tuple) -> tuple:
    shape = grid.index_shape
    out = []
    for axis, (i, n) in enumerate(zip(index, shape)):
        if axis in grid.periodic:
            i = i % n
        elif not 0 <= i < n:
            raise MissingNeighbor(f"index {index} outside grid of shape {shape}")
        out.append(i)
    return tuple(out)


def build_stencil(grid: SolutionGrid, base, template: StencilTemplate) -> StencilConfig:
    """Read the points ``base + j`` for every offset ``j`` of the template."""
    base = tuple(int(b) for b in np.atleast_1d(base))
    if len(base) != grid.ndim or len(template.offsets[0]) != grid.ndim:
        raise ValueError("base index, template offsets and grid must share dimension")
    rows = [grid.coords[_resolve(grid, tuple(b + o for b, o in zip(base, off)))] for off in template.offsets]
    return StencilConfig(template, np.stack(rows))


def build_stencils(grid: SolutionGrid, bases, template: StencilTemplate) -> StencilConfig:
    """Batched :func:`build_stencil` over an ``(n, ndim)`` array of bases."""
    bases = np.atleast_2d(np.asarray(bases, dtype=int))
    if bases.shape[-1] != grid.ndim:
        bases = bases.T
    shape = np.array(grid.index_shape)
    rows = []
    for off in template.offsets:
        idx = bases + np.array(off)
        for axis in range(grid.ndim):
            if axis in grid.periodic:
                idx[:, axis] %= shape[axis]
        if np.any(idx < 0) or np.any(idx >= shape):
            raise MissingNeighbor(f"offset {off} leaves the grid")
        rows.append(grid.coords[tuple(idx.T)])
    return StencilConfig(template, np.stack(rows, axis=-2))


def interior_bases(grid: SolutionGrid, template: StencilTemplate) -> np.ndarray:
    """All base indices whose full stencil lies in the grid."""
    offs = np.array(template.offsets)
    ranges = []
    for axis, n in enumerate(grid.index_shape):
        if axis in grid.periodic:
            ranges.append(np.arange(n))
        else:
            ranges.append(np.arange(-offs[:, axis].min(), n - offs[:, axis].max()))
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def write_stencil(grid: SolutionGrid, base, config: StencilConfig) -> SolutionGrid:
    """Return a copy of ``grid`` with the stencil's points written back."""
    base = tuple(int(b) for b in np.atleast_1d(base))
    c = np.array(grid.coords)
    for k, off in enumerate(config.template.offsets):
        c[_resolve(grid, tuple(b + o for b, o in zip(base, off)))] = config.coords[k]
    return grid.with_coords(c)
