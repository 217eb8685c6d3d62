"""p-adic L-function branches, Iwasawa lambda-invariants and finite BF path integrals."""
from .errors import (
    ArithPathError,
    BoundExceeded,
    CalibrationFailure,
    EquivarianceError,
    MuPositive,
    NonIntegerSum,
    NotStabilized,
    PrecisionExhausted,
    SchemaError,
)
from .padic import PadicScalar, PrimeContext

__version__ = "0.1.0"

__all__ = [
    "ArithPathError",
    "BoundExceeded",
    "CalibrationFailure",
    "EquivarianceError",
    "MuPositive",
    "NonIntegerSum",
    "NotStabilized",
    "PadicScalar",
    "PrecisionExhausted",
    "PrimeContext",
    "SchemaError",
]
