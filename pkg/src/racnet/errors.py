"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError (and subclasses) -> 1,
NumericError and anything else unexpected -> 2.
"""


class RacnetError(Exception):
    """Base class for all racnet errors."""


class ValidationError(RacnetError):
    """Input violates a documented precondition or format contract."""


class ParseError(ValidationError):
    """Malformed text input; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class NumericError(RacnetError):
    """Non-finite values or numerical failure during computation."""
