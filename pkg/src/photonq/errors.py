"""Exception types raised across the package."""


class PhotonqError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(PhotonqError, ValueError):
    pass


class IndexOutOfRange(PhotonqError, IndexError):
    pass


class ArityMismatch(PhotonqError, ValueError):
    pass


class UnknownParameter(PhotonqError, KeyError):
    pass


class ModeOutOfRange(PhotonqError, ValueError):
    pass


class DuplicateMode(PhotonqError, ValueError):
    pass


class NonUnitaryInput(PhotonqError, ValueError):
    pass


class MissingIntermediates(PhotonqError, RuntimeError):
    pass


class StaleIntermediates(PhotonqError, RuntimeError):
    pass


class PhotonCountMismatch(PhotonqError, ValueError):
    pass


class NonSquare(PhotonqError, ValueError):
    pass


class TooLarge(PhotonqError, ValueError):
    pass


class NullProjection(PhotonqError, ValueError):
    """Raised when a projection leaves (numerically) no probability mass."""


class InvalidModes(PhotonqError, ValueError):
    pass


class InvalidSpec(PhotonqError, ValueError):
    pass


class ZeroNorm(PhotonqError, ValueError):
    pass


class TooLong(PhotonqError, ValueError):
    pass


class NotNormalized(PhotonqError, ValueError):
    pass


class LengthMismatch(PhotonqError, ValueError):
    pass


class BadGrouping(PhotonqError, ValueError):
    pass


class BatchRowError(PhotonqError, RuntimeError):
    """Wraps a failure on one row of a batched evaluation."""

    def __init__(self, row: int, cause: Exception):
        super().__init__(f"row {row}: {cause}")
        self.row = row
        self.cause = cause
