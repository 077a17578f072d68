"""Exception classes for the sampling module.

This module defines the errors raised while drawing replicates, splitting
tagged datasets and reading dataset files.
"""

from typing import Sequence


class SamplingError(Exception):
    """Base exception class for sampling errors.

    Drawing happens inside power estimation, so these errors default to the
    test stage code; dataset file errors use the ingest code.
    """

    def __init__(self, message: str, code: int = 5):
        """Initialize the sampling error.

        Args:
            message: The error message.
            code: The process exit code associated with the error.
        """
        super().__init__(message)
        self.message = message
        self.code = code


class IncompatibleStrategyError(SamplingError):
    """Exception raised when a strategy is paired with the wrong kind of source."""

    def __init__(self, strategy: str, source: str):
        super().__init__(f"strategy {strategy!r} cannot draw from a {source} source")
        self.strategy = strategy
        self.source = source


class PoolTooSmallError(SamplingError):
    """Exception raised when a bootstrap replicate is larger than its pool."""

    def __init__(self, n: int, pool_size: int):
        super().__init__(
            f"cannot draw {n} rows without replacement from a pool of {pool_size}; "
            "lower n or enable bootstrap_with_replacement")
        self.n = n
        self.pool_size = pool_size


class CovarianceError(SamplingError):
    """Exception raised for a covariance that is not positive semidefinite."""


class UnknownTagError(SamplingError):
    """Exception raised when a tag is not in the dataset vocabulary."""

    def __init__(self, tag: str, vocabulary: Sequence[str]):
        super().__init__(f"unknown tag {tag!r}; vocabulary is {list(vocabulary)}")
        self.tag = tag
        self.vocabulary = list(vocabulary)


class DatasetFormatError(SamplingError):
    """Exception raised for a malformed F32D file."""

    def __init__(self, message: str, code: int = 3):
        super().__init__(message, code)


class SidecarError(DatasetFormatError):
    """Exception raised for a malformed or inconsistent tag sidecar."""
