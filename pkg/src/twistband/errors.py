"""Exception types shared across the toolkit."""


class TwistbandError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(TwistbandError):
    """A run configuration or input document failed validation."""


class NotPositiveDefiniteError(TwistbandError):
    """The inner-product matrix failed the positive-definiteness probe."""


class SolverConvergenceError(TwistbandError):
    """Eigensolver did not reach the requested tolerance within its budget.

    Carries the best residuals achieved so callers can report them.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DegenerateModeError(TwistbandError):
    """A (near-)degenerate transverse mode was used where simplicity is required."""


class MeshError(TwistbandError):
    """Geometry is degenerate or the triangulation failed a validity check."""
