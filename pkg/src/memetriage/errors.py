"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: DataValidationError and subclasses
exit 2, anything else unexpected exits 3.
"""


class MemetriageError(Exception):
    """Base class for all toolkit errors."""


class DataValidationError(MemetriageError):
    """Input data violates a documented contract (bad file, bad field, bad shape)."""


class ParseError(DataValidationError):
    """A line of an on-disk file could not be parsed; message names the location."""


class InsufficientDataError(DataValidationError):
    """Too few records for the requested operation."""


class TrainingError(MemetriageError):
    """Model training failed (divergence, degenerate labels, ...)."""


class CrossValidationError(TrainingError):
    """A fold's trainer failed; message names the fold."""
