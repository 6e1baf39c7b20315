"""Exception types shared across the package."""


class SparseProxError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(SparseProxError, ValueError):
    """Operand shapes are inconsistent."""


class InvalidDataError(SparseProxError, ValueError):
    """Input data violates a documented precondition (NaN/Inf, bad labels, ...)."""


class ActiveSetOverflowError(SparseProxError, RuntimeError):
    """Active-set enumeration would exceed the configured pattern cap.

    Truncating silently would corrupt d-stationarity certificates, so the
    blow-up is surfaced as an error carrying the cap that was hit.
    """

    def __init__(self, cap: int):
        super().__init__(f"active set exceeds cap of {cap} sign patterns")
        self.cap = cap


class LineSearchError(SparseProxError, RuntimeError):
    """Backtracking exceeded its hard iteration cap (indicates a gradient or L bug)."""


class DivergenceError(SparseProxError, RuntimeError):
    """A solver produced a non-finite objective value."""


class ParseError(SparseProxError, ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class GenerationError(SparseProxError, RuntimeError):
    """Synthetic instance generation failed to certify within the retry budget."""
