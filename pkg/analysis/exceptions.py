"""Custom exception classes for the analytic and Monte-Carlo routines."""

from typing import Any, Optional


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""

    def __init__(self, message: str, parameter: Optional[str] = None, value: Any = None):
        """
        Initialize DomainError.

        Args:
            message: Error message
            parameter: Name of the offending argument
            value: Offending value
        """
        super().__init__(message)
        self.message = message
        self.parameter = parameter
        self.value = value

    def __str__(self) -> str:
        """Return string representation."""
        parts = [self.message]
        if self.parameter:
            parts.append(f"Parameter: {self.parameter}")
        if self.value is not None:
            parts.append(f"Value: {self.value}")
        return " | ".join(parts)

    def __reduce__(self):
        # Keeps the context fields when raised inside a worker process.
        return type(self), (self.message, self.parameter, self.value)


class DimensionMismatchError(DomainError):
    """Raised when vector and matrix dimensions do not agree."""


class ZeroVectorError(DomainError):
    """Raised when a channel vector has zero norm."""


class ShapeTooSmallError(DomainError):
    """Raised when a gamma shape is too small for the requested moment."""

    def __init__(self, message: str, shape: float, minimum: float = 2.0):
        """
        Initialize ShapeTooSmallError.

        Args:
            message: Error message
            shape: Offending shape parameter
            minimum: Exclusive lower bound the shape must exceed
        """
        super().__init__(message, parameter="shape", value=shape)
        self.shape = shape
        self.minimum = minimum

    def __reduce__(self):
        return type(self), (self.message, self.shape, self.minimum)


class NumericalError(ArithmeticError):
    """Raised when a numerical routine fails to reach its tolerance."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message


class QuadratureBudgetError(NumericalError):
    """Raised when adaptive quadrature exhausts its subdivision budget."""

    def __init__(self, message: str, estimate: float, error_bound: float):
        """
        Initialize QuadratureBudgetError.

        Args:
            message: Error message (QUADPACK diagnostic)
            estimate: Best integral estimate reached
            error_bound: Absolute error bound of that estimate
        """
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound

    def __reduce__(self):
        return type(self), (self.message, self.estimate, self.error_bound)

    def __str__(self) -> str:
        return f"{self.message} | Estimate: {self.estimate:.9g} | Error bound: {self.error_bound:.3g}"


class SeriesConvergenceError(NumericalError):
    """Raised when a series does not reach its tolerance within the term budget."""

    def __init__(self, message: str, terms: int, partial_sum: float):
        super().__init__(message)
        self.terms = terms
        self.partial_sum = partial_sum

    def __reduce__(self):
        return type(self), (self.message, self.terms, self.partial_sum)

    def __str__(self) -> str:
        return f"{self.message} | Terms: {self.terms} | Partial sum: {self.partial_sum:.9g}"


class SeriesDivergenceError(NumericalError):
    """Raised when an alternating series grows instead of converging."""

    def __init__(self, message: str, ratio: float, terms: int):
        """
        Initialize SeriesDivergenceError.

        Args:
            message: Error message
            ratio: Geometric ratio of the series (theta_W / theta_S)
            terms: Terms summed before the watchdog fired
        """
        super().__init__(message)
        self.ratio = ratio
        self.terms = terms

    def __reduce__(self):
        return type(self), (self.message, self.ratio, self.terms)

    def __str__(self) -> str:
        return f"{self.message} | Ratio: {self.ratio:.6g} | Terms: {self.terms}"
