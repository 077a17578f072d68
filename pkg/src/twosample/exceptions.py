"""Exception classes for the twosample module.

This module defines the errors raised by the two-sample tests and the special
functions behind their tail probabilities.
"""


class TwoSampleError(Exception):
    """Base exception class for two-sample test errors.

    These errors belong to the test stage family.
    """

    def __init__(self, message: str, code: int = 5):
        """Initialize the two-sample error.

        Args:
            message: The error message.
            code: The process exit code associated with the error.
        """
        super().__init__(message)
        self.message = message
        self.code = code


class InsufficientSamplesError(TwoSampleError):
    """Exception raised when a group is too small for the requested test."""

    def __init__(self, method: str, n1: int, n2: int, required: str):
        super().__init__(f"{method} needs {required}; got group sizes {n1} and {n2}")
        self.method = method
        self.n1 = n1
        self.n2 = n2


class DegenerateSampleError(TwoSampleError):
    """Exception raised when both groups are constant with different means."""


class SingularCovarianceError(TwoSampleError):
    """Exception raised when the pooled covariance cannot be inverted reliably."""

    def __init__(self, condition_number: float, threshold: float):
        super().__init__(
            f"pooled covariance is singular or ill-conditioned (condition number {condition_number:.3g} "
            f"> {threshold:.0e}); reduce the dimensionality, e.g. with PCA, before testing")
        self.condition_number = condition_number
        self.threshold = threshold


class WidthMismatchError(TwoSampleError):
    """Exception raised when the two samples have different column counts."""

    def __init__(self, width_x: int, width_y: int):
        super().__init__(f"samples have different widths: {width_x} vs {width_y}")
        self.width_x = width_x
        self.width_y = width_y


class BandwidthError(TwoSampleError):
    """Exception raised for a non-positive or undeterminable kernel bandwidth."""


class SpecialFunctionDomainError(TwoSampleError):
    """Exception raised when a special function is evaluated outside its domain."""


class ConvergenceError(TwoSampleError):
    """Exception raised when a continued fraction does not converge."""


class UnknownTestError(TwoSampleError):
    """Exception raised for a test name the dispatcher does not know."""
