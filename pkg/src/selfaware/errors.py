"""Exception types shared across the package."""


class SelfAwareError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SelfAwareError, ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericalDegeneracyError(SelfAwareError, ArithmeticError):
    """Raised when a linear-algebra step becomes singular or collapses."""


class ParseError(SelfAwareError, ValueError):
    """Raised on malformed file content; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AlignmentError(SelfAwareError, ValueError):
    """Raised when two series cannot be aligned (empty overlap)."""
