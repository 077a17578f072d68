"""Exception classes for the pca module."""


class PCAError(Exception):
    """Base exception class for PCA errors.

    PCA runs on ingested data and its model files are stage inputs, so these
    errors use the ingest code.
    """

    def __init__(self, message: str, code: int = 3):
        """Initialize the PCA error.

        Args:
            message: The error message.
            code: The process exit code associated with the error.
        """
        super().__init__(message)
        self.message = message
        self.code = code


class ComponentCountError(PCAError):
    """Exception raised when the requested component count is out of range."""

    def __init__(self, k: int, maximum: int):
        super().__init__(f"component count {k} outside [1, {maximum}] (min(rows - 1, features))")
        self.k = k
        self.maximum = maximum


class InsufficientRowsError(PCAError):
    """Exception raised when fewer than two rows are given."""


class FeatureMismatchError(PCAError):
    """Exception raised when data width differs from the model's feature count."""

    def __init__(self, expected: int, got: int):
        super().__init__(f"model expects {expected} features, data has {got}")
        self.expected = expected
        self.got = got


class EigensolverError(PCAError):
    """Exception raised when the Jacobi sweeps do not converge or lose orthonormality."""


class ModelFormatError(PCAError):
    """Exception raised for a malformed or inconsistent model file."""
