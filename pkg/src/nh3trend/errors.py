"""Exception and warning types raised across the package."""


class Nh3TrendError(Exception):
    """Base class for all package errors."""


class DataError(Nh3TrendError, ValueError):
    """Input data cannot support the requested computation."""


class DegenerateInput(DataError):
    pass


class DomainError(Nh3TrendError, ValueError):
    pass


class InsufficientStations(DataError):
    pass


class InsufficientPairs(DataError):
    pass


class InsufficientData(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class WrongGranularity(DataError):
    pass


class EmptyInput(DataError):
    pass


class NoCommonStations(DataError):
    pass


class InvalidSpec(Nh3TrendError, ValueError):
    pass


class IndexOutOfRange(DataError, IndexError):
    pass


class AllMissing(DataError):
    pass


class ParseError(DataError):
    """Malformed input file. Carries the offending line and column when known."""

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class DuplicateKey(ParseError):
    pass


class AxisMismatch(DataError):
    pass


class ZeroSamplerMean(UserWarning):
    """A station's sampler mean is zero and was dropped from the month's fit."""


class MissingCalibrationMonth(UserWarning):
    """No calibration fit exists for a month that has passive-sampler data."""


class NonphysicalValue(UserWarning):
    """A calibrated concentration came out negative."""
