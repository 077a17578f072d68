"""Data models for the sampling module.

This module defines the sampleable sources, the drawing strategies and the
tagged dataset.
"""

import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence

import numpy as np

from .exceptions import CovarianceError, SamplingError, UnknownTagError

PSD_TOLERANCE = 1e-10


class Strategy(str, enum.Enum):
    """How replicates are drawn."""
    RESAMPLE = "resample"
    BOOTSTRAP = "bootstrap"
    SYNTHETIC = "synthetic"


def _covariance_factor(covariance: np.ndarray, d: int) -> np.ndarray:
    """Return L with L L^T = covariance, or the square roots of a diagonal."""
    if covariance.ndim == 1:
        if covariance.shape[0] != d:
            raise CovarianceError(f"diagonal covariance needs {d} entries, got {covariance.shape[0]}")
        if np.any(covariance < 0) or not np.all(np.isfinite(covariance)):
            raise CovarianceError("diagonal covariance entries must be finite and nonnegative")
        return np.sqrt(covariance)
    if covariance.shape != (d, d):
        raise CovarianceError(f"covariance must be {d}x{d}, got {covariance.shape}")
    if not np.allclose(covariance, covariance.T, rtol=0.0, atol=PSD_TOLERANCE):
        raise CovarianceError("covariance matrix is not symmetric")
    try:
        return np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        pass
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    scale = max(1.0, float(np.abs(eigenvalues).max()))
    if eigenvalues.min() < -PSD_TOLERANCE * scale:
        raise CovarianceError(
            f"covariance is not positive semidefinite (smallest eigenvalue {eigenvalues.min():.3g})")
    return eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


@dataclass(eq=False)
class GaussianSource:
    """A multivariate normal distribution.

    Attributes:
        mean: Mean vector.
        covariance: Diagonal entries as a vector, or a full matrix.
        name: Label used in logs and manifests.
    """
    mean: np.ndarray
    covariance: np.ndarray
    name: str = "gaussian"
    factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.covariance = np.asarray(self.covariance, dtype=np.float64)
        self.factor = _covariance_factor(self.covariance, self.mean.shape[0])

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        if self.factor.ndim == 1:
            return self.mean + z * self.factor
        return self.mean + z @ self.factor.T


@dataclass(eq=False)
class EmpiricalSource:
    """A fixed pool of observed rows.

    Attributes:
        pool: The rows, one observation per row.
        name: Label used in logs and manifests.
    """
    pool: np.ndarray
    name: str = "pool"

    def __post_init__(self):
        self.pool = np.asarray(self.pool, dtype=np.float64)
        if self.pool.ndim != 2 or self.pool.shape[0] == 0:
            raise SamplingError(f"an empirical pool must be a nonempty matrix, got shape {self.pool.shape}")

    @property
    def dim(self) -> int:
        return self.pool.shape[1]


@dataclass(eq=False)
class GenerativeSource:
    """A trained generator, optionally with a fixed condition.

    Attributes:
        checkpoint: The trained ``gan.ModelCheckpoint``.
        condition: Labels or a condition vector; required iff the model is
            conditional.
        name: Label used in logs and manifests.
    """
    checkpoint: object
    condition: Optional[object] = None
    name: str = "generator"

    @property
    def dim(self) -> int:
        return self.checkpoint.data_dim


COMPATIBLE_SOURCES = {
    Strategy.RESAMPLE: GaussianSource,
    Strategy.BOOTSTRAP: EmpiricalSource,
    Strategy.SYNTHETIC: GenerativeSource,
}


@dataclass(eq=False)
class TaggedDataset:
    """Rows with a set of tags each.

    Attributes:
        rows: The sample matrix.
        tags: One tag set per row; a row may carry several tags or none.
        vocabulary: Ordered tag names.
        keys: Optional row identifiers, e.g. the volume file names.
    """
    rows: np.ndarray
    tags: List[FrozenSet[str]]
    vocabulary: List[str]
    keys: Optional[List[str]] = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise SamplingError(f"dataset rows must form a matrix, got shape {self.rows.shape}")
        self.tags = [frozenset(t) for t in self.tags]
        self.vocabulary = list(self.vocabulary)
        if len(self.tags) != self.rows.shape[0]:
            raise SamplingError(f"{self.rows.shape[0]} rows but {len(self.tags)} tag sets")
        if self.keys is not None and len(self.keys) != len(self.tags):
            raise SamplingError(f"{len(self.tags)} rows but {len(self.keys)} row keys")
        known = set(self.vocabulary)
        for row_tags in self.tags:
            for tag in row_tags:
                if tag not in known:
                    raise UnknownTagError(tag, self.vocabulary)

    def __len__(self) -> int:
        return self.rows.shape[0]

    def tag_counts(self) -> Dict[str, int]:
        """Number of rows carrying each vocabulary tag."""
        return {tag: sum(tag in row_tags for row_tags in self.tags) for tag in self.vocabulary}

    def condition_matrix(self, vocabulary: Optional[Sequence[str]] = None) -> np.ndarray:
        """Multi-hot encoding of the row tags over ``vocabulary``."""
        vocabulary = list(vocabulary) if vocabulary is not None else self.vocabulary
        index = {tag: j for j, tag in enumerate(vocabulary)}
        matrix = np.zeros((len(self.tags), len(vocabulary)))
        for i, row_tags in enumerate(self.tags):
            for tag in row_tags:
                if tag not in index:
                    raise UnknownTagError(tag, vocabulary)
                matrix[i, index[tag]] = 1.0
        return matrix
