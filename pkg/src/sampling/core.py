"""Core sampling functionality.

This module draws replicates from sources under the three strategies, derives
per-replicate seeds and splits tagged datasets by tag.
"""

import hashlib
import logging
from typing import Tuple, Union

import numpy as np

from gan import sample as sample_generator

from .exceptions import IncompatibleStrategyError, PoolTooSmallError, SamplingError, UnknownTagError
from .models import COMPATIBLE_SOURCES, EmpiricalSource, GaussianSource, GenerativeSource, Strategy, TaggedDataset

logger = logging.getLogger(__name__)

Source = Union[GaussianSource, EmpiricalSource, GenerativeSource]


def derive_seed(master_seed: int, *components) -> int:
    """Stable 64-bit child seed for ``(master_seed, *components)``.

    The seed is the first 8 bytes (little endian) of the BLAKE2b digest of the
    components joined with ``|``. Enum components contribute their value.
    """
    parts = [str(int(master_seed))]
    for component in components:
        parts.append(str(component.value) if isinstance(component, Strategy) else str(component))
    digest = hashlib.blake2b("|".join(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def gaussian_sampler(mean, covariance, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` rows from N(mean, covariance).

    ``covariance`` is either the diagonal as a vector or a full PSD matrix.

    Raises:
        CovarianceError: If the covariance is not positive semidefinite.
    """
    return GaussianSource(mean, covariance).sample(n, np.random.default_rng(seed))


def _source_kind(source) -> str:
    return type(source).__name__.replace("Source", "").lower()


def draw(source: Source, strategy: Strategy, n: int, seed: int, with_replacement: bool = False) -> np.ndarray:
    """Draw a replicate of ``n`` rows.

    Args:
        source: Where to draw from.
        strategy: Resample for Gaussian sources, Bootstrap for empirical
            pools, Synthetic for trained generators.
        n: Number of rows.
        seed: Seed of this replicate.
        with_replacement: Bootstrap with replacement instead of subsampling.

    Returns:
        An (n, d) matrix.

    Raises:
        IncompatibleStrategyError: If the strategy does not fit the source.
        PoolTooSmallError: If a Bootstrap replicate exceeds the pool without
            replacement.
    """
    strategy = Strategy(strategy)
    if not isinstance(source, COMPATIBLE_SOURCES[strategy]):
        raise IncompatibleStrategyError(strategy.value, _source_kind(source))
    if n < 0:
        raise SamplingError(f"replicate size must be nonnegative, got {n}")
    if strategy is Strategy.RESAMPLE:
        return source.sample(n, np.random.default_rng(seed))
    if strategy is Strategy.BOOTSTRAP:
        pool_size = source.pool.shape[0]
        if n > pool_size and not with_replacement:
            raise PoolTooSmallError(n, pool_size)
        rng = np.random.default_rng(seed)
        return source.pool[rng.choice(pool_size, size=n, replace=with_replacement)]
    return sample_generator(source.checkpoint, n, condition=source.condition, seed=seed)


def split_by_tag(dataset: TaggedDataset, tag: str) -> Tuple[np.ndarray, np.ndarray]:
    """Split rows by presence of ``tag``.

    Returns:
        ``(D1, D0)``: rows carrying the tag and all other rows, each in
        dataset order.

    Raises:
        UnknownTagError: If ``tag`` is not in the vocabulary.
    """
    if tag not in dataset.vocabulary:
        raise UnknownTagError(tag, dataset.vocabulary)
    mask = np.array([tag in row_tags for row_tags in dataset.tags], dtype=bool)
    with_tag, without_tag = dataset.rows[mask], dataset.rows[~mask]
    if with_tag.shape[0] == 0:
        logger.warning("no rows carry tag %r; D1 is empty", tag)
    if without_tag.shape[0] == 0:
        logger.warning("every row carries tag %r; D0 is empty", tag)
    return with_tag, without_tag
