"""Exception types shared across the toolkit."""

from __future__ import annotations


class StreamOrderError(ValueError):
    """A post arrived earlier than the per-user ordering tolerance allows."""


class InsufficientDataError(ValueError):
    """A series is too short to finish an estimator's warm-up."""


class PostParseError(ValueError):
    """A post record could not be parsed.

    Attributes
    ----------
    line_number : int or None
        1-based line number in the input, if known.
    field : str or None
        Name of the offending field.
    reason : str
        Human-readable cause.
    """

    def __init__(self, reason: str, field: str | None = None, line_number: int | None = None):
        self.reason = reason
        self.field = field
        self.line_number = line_number
        where = f"line {line_number}: " if line_number is not None else ""
        what = f"field {field!r}: " if field is not None else ""
        super().__init__(f"{where}{what}{reason}")
