"""
Symmetry-preserving finite-difference schemes.

Stencils and their discrete prolongation, Lie-algebra checks (strong and weak
invariance, invariant counting), point transformations acting on schemes and
solutions, a catalogue of invariant families and schemes, and marching or
iterative solvers for them.
"""
from . import errors, invariants, lie, rng, schemes, solvers, stencil, transforms
from .errors import SymmError
from .invariants import InvariantFamily, get_family
from .lie import (
    SymmetryAlgebra,
    VectorField,
    check_finite_invariance,
    check_strong_invariance,
    check_weak_invariance,
    check_zero_set_preservation,
    invariant_count,
    prolong,
)
from .rng import SplitMix64
from .schemes import Scheme, consistency_order, get_scheme, residuals
from .stencil import SolutionGrid, StencilConfig, StencilTemplate, build_stencil
from .transforms import PointTransformation, get_transform, pushforward_scheme

__version__ = "0.1.0"

__all__ = [
    "InvariantFamily",
    "PointTransformation",
    "Scheme",
    "SolutionGrid",
    "SplitMix64",
    "StencilConfig",
    "StencilTemplate",
    "SymmError",
    "SymmetryAlgebra",
    "VectorField",
    "build_stencil",
    "check_finite_invariance",
    "check_strong_invariance",
    "check_weak_invariance",
    "check_zero_set_preservation",
    "consistency_order",
    "errors",
    "get_family",
    "get_scheme",
    "get_transform",
    "invariant_count",
    "invariants",
    "lie",
    "prolong",
    "pushforward_scheme",
    "residuals",
    "rng",
    "schemes",
    "solvers",
    "stencil",
    "transforms",
]
