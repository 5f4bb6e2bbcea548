"""Exception types raised across the package."""


class SemiglobalError(Exception):
    """Base class for all errors raised by this package."""


class InvalidPotential(SemiglobalError, ValueError):
    """Potential description is malformed or violates a structural rule."""


class RootFindingFailed(SemiglobalError):
    """Turning-point search did not meet its residual test."""


class BranchAmbiguous(SemiglobalError):
    """Momentum branch could not be followed continuously along a path."""


class QuadratureNoConvergence(SemiglobalError):
    """Adaptive quadrature exhausted its refinement budget."""


class SectorDegenerate(SemiglobalError):
    """No decay sector survived the monotonicity check."""


class PathBlocked(SemiglobalError):
    """No singularity-avoiding route exists for the requested path."""


class NoIndependentPair(SemiglobalError):
    """Two linearly independent solutions could not be constructed."""


class PathInvalid(SemiglobalError):
    """Contour violates clearance or does not end in decaying territory."""


class GridTooCoarse(SemiglobalError):
    """Grid too short or too coarse for the requested finite differences."""


class NormalizationDegenerate(SemiglobalError):
    """Normalization reference value vanishes."""


class AtTurningPoint(SemiglobalError):
    """WKB amplitude requested where the classical momentum vanishes."""


class OutOfWindow(SemiglobalError):
    """Argument lies outside the supported evaluation window."""


class BadBoundary(SemiglobalError):
    """Boundary condition cannot be imposed at the requested endpoint."""


class IllConditionedFit(SemiglobalError):
    """Reference solutions are nearly dependent on the comparison grid."""


class ConfigError(SemiglobalError, ValueError):
    """Run configuration is invalid."""
