"""Data models for the pca module."""

from dataclasses import dataclass

import numpy as np

FORMAT_VERSION = 1


@dataclass(eq=False)
class PCAModel:
    """A fitted principal component projection.

    Attributes:
        mean: Feature means, length d.
        components: k x d matrix with orthonormal rows, in order of
            nonincreasing eigenvalue.
        eigenvalues: The k leading eigenvalues of the sample covariance.
        total_variance: Trace of the sample covariance.
        format_version: Model file format version.
    """
    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float
    format_version: int = FORMAT_VERSION

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance == 0:
            return np.zeros_like(self.eigenvalues)
        return self.eigenvalues / self.total_variance

    def __eq__(self, other) -> bool:
        return (isinstance(other, PCAModel)
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.components, other.components)
                and np.array_equal(self.eigenvalues, other.eigenvalues)
                and self.total_variance == other.total_variance
                and self.format_version == other.format_version)
