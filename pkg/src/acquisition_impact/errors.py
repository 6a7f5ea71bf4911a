"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class AIMError(Exception):
    """Base class for all errors raised by this package."""


class DataError(AIMError):
    """Input data violates a format or integrity rule."""


class ParseError(DataError):
    """A row in an input file could not be parsed."""

    def __init__(self, path, line: int, message: str) -> None:
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class IntegrityError(DataError):
    """Records reference each other inconsistently (unknown ids, duplicates)."""


class EmptyControlError(AIMError):
    """The pre-launch window of a launch contains no signups."""


class EstimationError(AIMError):
    """Generic failure while computing incremental estimates."""


class UnstableDenominatorError(EstimationError):
    """Baseline rate too close to 1 for the incrementality equation."""

    def __init__(self, message: str, date=None) -> None:
        self.date = date
        if date is not None:
            message = f"{message} (day {date})"
        super().__init__(message)


class InfeasibleError(AIMError):
    """An attribution instance cannot satisfy its quotas."""

    def __init__(self, content_id, quota: int, available: int) -> None:
        self.content_id = content_id
        self.quota = quota
        self.available = available
        super().__init__(
            f"content {content_id!r}: quota {quota} exceeds {available} candidate(s)"
        )


class InstanceTooLargeError(AIMError):
    """Brute-force enumeration refused: instance exceeds the size bound."""


class InsufficientDataError(AIMError):
    """Series too short for the requested diagnostic."""
