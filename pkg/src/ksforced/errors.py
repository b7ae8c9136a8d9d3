"""Exception hierarchy."""


class KSError(Exception):
    """Base class for all package errors."""


class ParameterError(KSError, ValueError):
    """A numeric parameter is outside its admissible range.

    ``field`` optionally names the offending parameter.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class QuadratureError(KSError, ArithmeticError):
    """Non-finite data handed to a quadrature, or a quadrature that did not converge."""


class ShapeError(KSError, ValueError):
    """Fields live on different grids or have the wrong size."""


class DomainError(KSError, ValueError):
    """Input outside the domain of a functional (e.g. negative density in u log u)."""


class InsufficientDataError(KSError):
    """A trajectory is too short for the requested check."""


class TimeStepUnderflow(KSError):
    """The admissible time step fell below ``dt_min``; treated as blow-up evidence."""


class ConfigError(KSError):
    """Invalid experiment configuration. ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class SnapshotFormatError(KSError):
    """Malformed KSF1 binary snapshot."""
