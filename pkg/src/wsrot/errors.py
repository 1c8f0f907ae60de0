"""Exception types shared across the package.

Every error raised by library code derives from WsrotError so callers can
catch the package's failures with one handler while CLI code maps subtypes
to exit codes.
"""


class WsrotError(Exception):
    """Base class for all package errors."""


class ValidationError(WsrotError):
    """Input rejected before any numerics ran (bad config, bad arguments)."""


class ConfigError(ValidationError):
    """Config file failed schema validation; carries a pointer to the key."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer


class DomainError(ValidationError):
    """Argument outside the mathematical domain of an operation."""


class CollisionError(WsrotError):
    """Two phases closer than the configured separation floor."""


class NotSortableError(ValidationError):
    """Phase labels are not in cyclic order, so no canonical branch exists."""


class NumericalError(WsrotError):
    """A numerical computation left its trusted regime."""


class ConvergenceError(NumericalError):
    """An iterative computation could not reach the requested tolerance."""


class NoFixedPointError(WsrotError):
    """Parameters admit no fixed point of the truncated dynamics."""


class BoundaryError(WsrotError):
    """Parameters sit on the fixed-point existence boundary within tolerance."""


class FrequencyBelowThresholdError(NumericalError):
    """Rotation frequency too small for period-based machinery."""


class NotConvergedError(NumericalError):
    """Limit-cycle search did not converge within the time budget."""


class StepFailure(NumericalError):
    """Adaptive integrator step size underflowed."""


class QuadratureError(NumericalError):
    """Quadrature refinement estimate exceeded its error budget."""
