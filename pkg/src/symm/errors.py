"""Exception hierarchy shared by every module of the package."""


class SymmError(Exception):
    """Base class for all package errors."""


class MissingNeighbor(SymmError, IndexError):
    """A stencil offset falls outside the solution grid."""


class MissingLabel(SymmError, KeyError):
    """A stencil label required by a formula is not in the template."""


class MeshTangled(SymmError):
    """Node coordinates of a lattice layer are not strictly monotone."""


class DomainViolation(SymmError, ValueError):
    """A formula was evaluated outside its domain (log of a nonpositive value, zero step...)."""


class StepTooLarge(DomainViolation):
    """The explicit heat update has no positive root for the requested time step."""


class FlowEscapedDomain(SymmError):
    """Integration of a vector field left its domain or blew up."""


class StepSizeUnderflow(FlowEscapedDomain):
    """The adaptive integrator could not take a representable step."""


class SamplerViolatesManifold(SymmError):
    """A manifold sampler returned a configuration that is off the manifold."""


class RankUnstable(SymmError):
    """The numerical rank of the Z matrix differs between generic samples."""

    def __init__(self, ranks):
        self.ranks = sorted(set(int(r) for r in ranks))
        super().__init__(f"numerical rank varies across samples: {self.ranks}")


class OutsideChart(SymmError, ValueError):
    """A point lies outside the domain of a point transformation."""


class JacobianUnavailable(SymmError):
    """A transformation has no Jacobian and finite-difference fallback was refused."""


class RootFindFailed(SymmError):
    """Newton iteration did not converge."""


class NotConverged(SymmError):
    """The elliptic iteration hit its sweep limit."""

    def __init__(self, iterations, max_update, max_residual):
        self.iterations = iterations
        self.max_update = max_update
        self.max_residual = max_residual
        super().__init__(
            f"not converged after {iterations} sweeps "
            f"(max update {max_update:.3e}, max normalized residual {max_residual:.3e})"
        )
