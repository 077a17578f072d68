"""Exception classes for the power module."""


class PowerError(Exception):
    """Base exception class for power estimation errors."""

    def __init__(self, message: str, code: int = 5):
        """Initialize the power error.

        Args:
            message: The error message.
            code: The process exit code associated with the error.
        """
        super().__init__(message)
        self.message = message
        self.code = code


class PowerConfigError(PowerError):
    """Exception raised for invalid power settings, including grids the test cannot run on."""

    def __init__(self, message: str):
        super().__init__(message, code=2)


class ErrorBudgetExceededError(PowerError):
    """Exception raised when too many trials of one grid point fail."""

    def __init__(self, n: int, errors: int, trials: int, budget: float):
        super().__init__(
            f"{errors} of {trials} trials failed at n={n}, above the error budget of {budget:.0%}")
        self.n = n
        self.errors = errors
        self.trials = trials
        self.budget = budget


class EmptyGroupError(PowerError):
    """Exception raised when a tag split leaves one side without rows."""


class CurveFormatError(PowerError):
    """Exception raised for a malformed power-curve table."""

    def __init__(self, message: str):
        super().__init__(message, code=3)
