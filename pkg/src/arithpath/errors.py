"""Exception types shared across the package.

The CLI maps these onto exit codes, so each one names a distinct failure the
caller can act on.
"""


class ArithPathError(Exception):
    """Base class for all package errors."""


class PrecisionExhausted(ArithPathError):
    """A quantity vanished within the working precision; rebuild with larger M."""


class MuPositive(ArithPathError):
    """Every coefficient of a series is divisible by p within the window."""


class CalibrationFailure(ArithPathError):
    """No Stickelberger convention reproduced the interpolation nodes."""

    def __init__(self, message, attempted=()):
        super().__init__(message)
        self.attempted = list(attempted)


class NonIntegerSum(ArithPathError):
    """A brute-force Gauss sum left nonconstant cyclotomic coefficients."""


class SchemaError(ArithPathError):
    """An instance or fixture document does not match its schema."""


class NotStabilized(ArithPathError):
    """An m-indexed sequence did not settle within the supplied range."""


class BoundExceeded(ArithPathError):
    """A configured computational bound (Bernoulli index, enumeration size) was hit."""


class EquivarianceError(ArithPathError):
    """A graded instance mixes eigen-levels that must stay separate."""
