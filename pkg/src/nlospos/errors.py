"""Exception hierarchy shared across the package."""


class NlosPosError(Exception):
    """Base class for all package errors."""


class ValidationError(NlosPosError, ValueError):
    """An input violated a documented invariant."""


class GeometryError(ValidationError):
    """Degenerate geometry (coincident points, zero-length segments)."""


class InsufficientPathsError(ValidationError):
    """Fewer paths than an operation needs."""


class ParseError(ValidationError):
    """A path file or scene file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(NlosPosError, ArithmeticError):
    """A linear system contained non-finite entries or could not be solved."""
