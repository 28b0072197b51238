"""Exception types raised across the package."""


class GpceError(Exception):
    """Base class for all library errors."""


class DimensionError(GpceError, ValueError):
    """Lengths or dimensions of inputs disagree."""


class RangeError(GpceError, OverflowError):
    """An integer count exceeds the 64-bit capacity."""


class ShapeError(GpceError, ValueError):
    """A matrix is not square or not symmetric."""


class DefinitenessError(GpceError, ValueError):
    """A matrix that must be positive-definite is not."""


class ConditioningError(GpceError, ValueError):
    """A matrix is too ill-conditioned, or a solve broke down."""


class CapacityError(GpceError, ValueError):
    """A request exceeds a built-in table."""


class DomainError(GpceError, ValueError):
    """An argument lies outside the domain of the operation."""


class EvaluationError(GpceError, ArithmeticError):
    """An output function returned a non-finite value."""

    def __init__(self, message: str, sample_index: int | None = None):
        super().__init__(message)
        self.sample_index = sample_index


class ConsistencyError(GpceError, RuntimeError):
    """An internal invariant failed; indicates a bug rather than bad input."""
