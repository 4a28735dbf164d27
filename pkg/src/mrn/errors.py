"""Exception hierarchy shared across the package."""


class MRNError(Exception):
    """Base class for all package errors."""


class UsageError(MRNError, ValueError):
    """An API was called with arguments that violate its contract."""


class ShapeError(UsageError):
    """Operand shapes do not conform for an operator."""


class NumericError(MRNError, ArithmeticError):
    """A NaN or Inf appeared at an operator boundary."""


class ConfigError(MRNError, ValueError):
    pass


class DatasetError(MRNError, ValueError):
    """The dataset cannot serve the requested episode shape."""


class FormatError(MRNError, ValueError):
    """A binary file is malformed. ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
