"""Exception hierarchy shared by the library and the CLI."""


class TolsError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(TolsError, ValueError):
    exit_code = 2


class DataError(TolsError, ValueError):
    """Input data is missing, malformed, or outside an operation's domain."""

    exit_code = 3


class SeriesFileNotFound(DataError, FileNotFoundError):
    pass


class MissingColumnError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, row: int):
        super().__init__(message)
        self.row = row


class DomainError(DataError):
    """A value violates a transform's domain (e.g. nonpositive before a log)."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class CapExceededError(DataError):
    def __init__(self, required: int, allowed: int):
        super().__init__(
            f"materialization needs {required} entries, cap allows {allowed}"
        )
        self.required = required
        self.allowed = allowed


class NumericalError(TolsError, ArithmeticError):
    exit_code = 4


class RankDeficientError(NumericalError):
    pass


class DegenerateResidualError(NumericalError):
    """Residual vector is identically zero, so the sampling law is undefined."""
