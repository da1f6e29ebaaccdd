"""
Error classes shared by all bautin-lab modules.

Each error carries the short `kind` string used in JSON output and the exit code
the command line maps it to:

    2  validation errors (bad input, violated preconditions)
    3  precision or truncation insufficiency (retry with more coefficients)
    4  inconclusive structured outcomes

Stalled Bautin indices, unresolved rational candidates and heuristic zero counts
are returned as values, not raised.
"""


class BautinLabError(Exception):
    """Base class for every error raised on purpose by bautin-lab."""

    kind = "error"
    exit_code = 2

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        return {
            "status": "error",
            "kind": self.kind,
            "message": self.message,
            "details": {key: str(value) for key, value in self.details.items()},
        }


class ValidationError(BautinLabError):
    kind = "validation-error"
    exit_code = 2


class RadiusOutOfRangeError(ValidationError):
    kind = "radius-out-of-range"


class LacunarityViolationError(ValidationError):
    kind = "lacunarity-violation"

    def __init__(self, message, k, **details):
        super().__init__(message, k=k, **details)
        self.k = k


class OutOfRangeError(ValidationError):
    kind = "out-of-range"


class RankDeficientError(ValidationError):
    kind = "rank-deficient"


class TruncationTooShortError(BautinLabError):
    kind = "truncation-too-short"
    exit_code = 3


class TableTooSmallError(TruncationTooShortError):
    kind = "table-too-small"


class PrecisionInsufficientError(BautinLabError):
    kind = "precision-insufficient"
    exit_code = 3


class RootOnContourError(BautinLabError):
    kind = "root-on-contour"
    exit_code = 3


class InconclusiveError(BautinLabError):
    kind = "inconclusive"
    exit_code = 4
