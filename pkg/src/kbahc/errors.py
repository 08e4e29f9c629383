"""Exception hierarchy.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""
from __future__ import annotations

__all__ = [
    "KbahcError",
    "ConfigError",
    "DataError",
    "ParseError",
    "EmptyUniverseError",
    "MissingDataError",
    "NumericError",
    "DegenerateAssetError",
    "SingularCovarianceError",
    "ConvergenceError",
]


class KbahcError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(KbahcError):
    """Invalid parameters or configuration input."""


class DataError(KbahcError):
    """Problems with panel content or panel files."""


class ParseError(DataError):
    """CSV parse failure, carries row/column context in the message."""

    def __init__(self, message: str, row: int | None = None, column: str | int | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyUniverseError(DataError):
    """No asset has complete data over the requested window."""


class MissingDataError(DataError):
    """A dense slice was requested over entries marked unavailable."""


class NumericError(KbahcError):
    """Estimation or solver failure."""


class DegenerateAssetError(NumericError):
    """An asset with zero variance where positive variance is required."""


class SingularCovarianceError(NumericError):
    """Covariance not positive definite where a solve requires it."""


class ConvergenceError(NumericError):
    """An iterative solver exhausted its iteration budget."""
