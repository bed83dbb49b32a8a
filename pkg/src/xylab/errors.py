"""Exception types shared across the package."""
from __future__ import annotations


class XylabError(Exception):
    """Base class for all package errors."""


class DimensionError(XylabError, ValueError):
    """Operands act on different numbers of qubits."""


class ValidationError(XylabError, ValueError):
    """Input violates a documented precondition."""


class CapacityError(XylabError):
    """A size limit was exceeded.

    ``partial`` carries whatever was computed before the limit was hit
    (for example the partial basis of an interrupted DLA build).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ParseError(XylabError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateSpectrumError(XylabError):
    """Approximation ratio is undefined because E_min == E_max."""
