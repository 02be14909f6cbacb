"""Exception hierarchy shared across the toolkit.

UsageError maps to CLI exit code 1, DataError (and subclasses) to exit
code 2.
"""


class XaidroidError(Exception):
    pass


class UsageError(XaidroidError):
    """Caller violated an interface contract (bad arguments, shapes, flags)."""


class DataError(XaidroidError):
    """Input data is malformed or inconsistent."""


class ParseError(DataError):
    """Listing document could not be parsed; carries a 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(DataError):
    """Non-finite values where finite numbers are required."""
