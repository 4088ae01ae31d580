"""Exception types shared across the package.

The CLI maps these onto process exit codes, so keep the taxonomy small and
stable.
"""


class GafLabError(Exception):
    """Base class for all package errors."""


class DomainError(GafLabError):
    """A point lies outside the disk on which a model is defined."""


class ModelValidationError(GafLabError):
    """A weight model violates an admissibility requirement."""


class ConfigError(GafLabError):
    """Experiment configuration file is malformed or inconsistent."""


class QuadratureError(GafLabError):
    """A quadrature rule failed its self-consistency refinement check."""


class IllConditionedGramError(GafLabError):
    """Monomial Gram matrix is not positive definite at working precision."""


class ResourceLimitError(GafLabError):
    """A computation exceeded a configured size cap."""


class DegenerateSectionError(GafLabError):
    """A section is identically zero (probability-zero event)."""


class RootFindingError(GafLabError):
    """Simultaneous root iteration failed to converge."""


class KernelInvariantError(GafLabError):
    """Normalized kernel exceeded 1 beyond tolerance: broken basis."""


class InsufficientDataError(GafLabError):
    """Too few samples for the requested statistic."""


class ExperimentError(GafLabError):
    """An experiment produced degenerate output (e.g. zero variance)."""
