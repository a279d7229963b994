"""Exception types.

Validation errors (bad input data, shapes, parameters, configs) map to CLI exit
code 1; estimation failures and other runtime problems map to exit code 2.
"""


class WindflexError(Exception):
    pass


class ValidationError(WindflexError, ValueError):
    pass


class EstimationError(WindflexError):
    pass


class InvalidParameters(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class NonPositiveSeasonality(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class WrongHorizon(ValidationError):
    pass


class RankDeficient(ValidationError):
    pass


class EmptySurface(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class RangeViolation(ParseError):
    pass


class GapDetected(ValidationError):
    pass


class NonStationary(EstimationError):
    pass


class NonStationaryFit(EstimationError):
    pass


class MomentMatchFailure(EstimationError):
    """Raised when the jump moment system has no nonnegative exact solution.

    ``fallback`` holds the bounded least-squares parameters that were computed
    instead, so callers can decide whether to use them.
    """

    def __init__(self, message, fallback=None):
        super().__init__(message)
        self.fallback = fallback
