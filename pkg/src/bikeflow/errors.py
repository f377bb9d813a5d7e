"""Exception hierarchy.

``BikeflowError`` subclasses split into two families: ``DataError`` for
problems with the input data (the CLI maps these to exit code 2) and
``UsageError`` for bad arguments or configuration (exit code 1).
"""


class BikeflowError(Exception):
    pass


class DataError(BikeflowError):
    pass


class UsageError(BikeflowError, ValueError):
    pass


# ingest
class MalformedDocument(DataError):
    pass


class NonMonotonicTimestamp(DataError):
    pass


class DuplicateStationInSnapshot(DataError):
    pass


class SchemaViolation(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# preprocess / cycles
class UnknownStation(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EvenWindow(UsageError):
    pass


class NoMatchingDays(DataError):
    pass


class TimeOffGrid(UsageError):
    pass


class EmptyInput(DataError):
    pass


# cluster
class LengthMismatch(UsageError):
    pass


class TooShort(UsageError):
    pass


class KTooLarge(UsageError):
    pass


class MetaKTooLarge(UsageError):
    pass


class RangeEmpty(UsageError):
    pass


# predict
class InsufficientData(DataError):
    pass


class MissingCycleBin(DataError):
    pass


# routes
class DimensionMismatch(UsageError):
    pass


class NonConvergence(UserWarning):
    """Warning category: the simplex stopped on its iteration cap."""


# simgen
class InvalidSpec(UsageError):
    pass
