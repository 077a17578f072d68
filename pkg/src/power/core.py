"""Core power-analysis functionality.

This module estimates the power of a two-sample test by Monte-Carlo trials,
assembles real and synthetic power curves over a sample-size grid, smooths
them and recommends the smallest sample size that reaches a power target.
"""

import logging
import math
from contextlib import contextmanager
from dataclasses import replace
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from multiprocess.pool import ThreadPool

from sampling import (
    EmpiricalSource,
    GaussianSource,
    GenerativeSource,
    Strategy,
    TaggedDataset,
    derive_seed,
    draw,
    split_by_tag,
)
from twosample import TwoSampleError, run_test

from .exceptions import EmptyGroupError, ErrorBudgetExceededError, PowerConfigError, PowerError
from .models import CurveLabel, PowerConfig, PowerCurve, PowerCurvePoint, Recommendation

logger = logging.getLogger(__name__)

# Two-sided 97.5% standard normal quantile.
Z_95 = 1.959963984540054

TEST_SEED_TAG = "test"


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    z2 = z * z
    center = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / (1 + z2 / trials)
    return max(0.0, center - half), min(1.0, center + half)


def real_strategy(source) -> Strategy:
    """The strategy that draws real replicates from ``source``."""
    if isinstance(source, GaussianSource):
        return Strategy.RESAMPLE
    if isinstance(source, EmpiricalSource):
        return Strategy.BOOTSTRAP
    return Strategy.SYNTHETIC


@contextmanager
def _worker_pool(threads: int) -> Iterator[Optional[ThreadPool]]:
    if threads <= 1:
        yield None
        return
    pool = ThreadPool(processes=threads)
    try:
        yield pool
    finally:
        pool.close()
        pool.join()


def _run_trial(src1, src2, strategy1: Strategy, strategy2: Strategy, n: int, k: int,
               config: PowerConfig) -> Optional[bool]:
    """One trial; True if the test rejects, None if it raised a test error."""
    seed = config.master_seed
    x = draw(src1, strategy1, n, derive_seed(seed, strategy1, n, k, 0), config.bootstrap_with_replacement)
    y = draw(src2, strategy2, n, derive_seed(seed, strategy2, n, k, 1), config.bootstrap_with_replacement)
    try:
        result = run_test(x, y, config.test, seed=derive_seed(seed, TEST_SEED_TAG, n, k))
    except TwoSampleError as e:
        logger.debug("trial %d at n=%d excluded: %s", k, n, e.message)
        return None
    return result.rejects(config.alpha)


def estimate_power(src1, src2, strategy1: Strategy, strategy2: Strategy, n: int, config: PowerConfig,
                   pool: Optional[ThreadPool] = None) -> PowerCurvePoint:
    """Estimate the power at per-group size ``n`` from ``config.trials`` trials.

    Trial ``k`` draws its replicates with seeds derived from
    ``(master_seed, strategy, n, k, group)``, so the estimate is the same for
    any thread count. Trials raising a two-sample test error are excluded
    from ``K``.

    Args:
        src1: First source.
        src2: Second source.
        strategy1: Strategy of the first source.
        strategy2: Strategy of the second source.
        n: Per-group sample size.
        config: Power settings.
        pool: Optional worker pool; trials run sequentially without one.

    Returns:
        The PowerCurvePoint with its Wilson interval.

    Raises:
        ErrorBudgetExceededError: If more than ``error_budget`` of the trials
            fail.
    """
    def trial(k: int) -> Optional[bool]:
        return _run_trial(src1, src2, strategy1, strategy2, n, k, config)

    trials = range(config.trials)
    outcomes = pool.map(trial, trials) if pool is not None else [trial(k) for k in trials]
    errors = sum(outcome is None for outcome in outcomes)
    if errors > config.error_budget * config.trials or errors == config.trials:
        raise ErrorBudgetExceededError(n, errors, config.trials, config.error_budget)
    if errors:
        logger.warning("n=%d: excluded %d of %d trials after test errors", n, errors, config.trials)
    valid = config.trials - errors
    rejections = sum(outcome is True for outcome in outcomes)
    low, high = wilson_interval(rejections, valid)
    return PowerCurvePoint(n=n, gamma=rejections / valid, rejections=rejections, trials=valid,
                           ci_low=low, ci_high=high, errors_excluded=errors)


def _pairing_name(strategies: Tuple[Strategy, Strategy]) -> str:
    if strategies[0] is strategies[1]:
        return strategies[0].value
    return f"{strategies[0].value}-{strategies[1].value}"


def _pool_limit(source, strategy: Strategy, config: PowerConfig) -> Optional[int]:
    if strategy is Strategy.BOOTSTRAP and not config.bootstrap_with_replacement:
        return source.pool.shape[0]
    return None


def pairing_curve(src1, src2, strategies: Tuple[Strategy, Strategy], config: PowerConfig,
                  pool: Optional[ThreadPool] = None) -> PowerCurve:
    """Power curve of one pairing of sources and strategies over the config grid.

    Bootstrap grid points larger than a pool drawn without replacement are
    skipped and listed in ``skipped``. The curve comes back smoothed.
    """
    if pool is None and config.threads > 1:
        with _worker_pool(config.threads) as own_pool:
            return pairing_curve(src1, src2, strategies, config, own_pool)
    strategies = (Strategy(strategies[0]), Strategy(strategies[1]))
    strategy_name = _pairing_name(strategies)
    if src1.dim != src2.dim:
        raise PowerConfigError(f"sources have {src1.dim} and {src2.dim} columns")
    _check_grid(src1.dim, config)
    label = CurveLabel(test=config.test.name, strategy=strategy_name, sources=(src1.name, src2.name))
    curve = PowerCurve(label=label, fingerprint=config.fingerprint())
    limits = [limit for limit in (_pool_limit(src1, strategies[0], config), _pool_limit(src2, strategies[1], config))
              if limit is not None]
    for n in config.grid:
        if limits and n > min(limits):
            curve.skipped.append(n)
            continue
        point = estimate_power(src1, src2, strategies[0], strategies[1], n, config, pool)
        logger.info("%s/%s n=%d gamma=%.3f [%.3f, %.3f]", label.test, strategy_name, n, point.gamma,
                    point.ci_low, point.ci_high)
        curve.points.append(point)
    if curve.skipped:
        logger.warning("%s/%s: skipped n=%s, larger than the smaller pool (%d rows)", label.test, strategy_name,
                       curve.skipped, min(limits))
    if not curve.points:
        raise PowerError(f"no grid point of {config.n_start}:{config.n_end}:{config.n_step} fits the pools")
    return smooth(curve, config.smooth_window)


def _check_grid(width: int, config: PowerConfig) -> None:
    minimum = config.test.minimum_group_size(width)
    if config.n_start < minimum:
        raise PowerConfigError(
            f"test {config.test.name!r} on {width} columns needs n >= {minimum}; grid starts at {config.n_start}")


def power_curve(real1, real2, config: PowerConfig, synthetic1: Optional[GenerativeSource] = None,
                synthetic2: Optional[GenerativeSource] = None) -> Tuple[PowerCurve, Optional[PowerCurve]]:
    """Power curves of the real pairing and, if generators are given, the synthetic pairing.

    Args:
        real1: First real source, Gaussian or empirical.
        real2: Second real source.
        config: Power settings; ``config.strategies`` overrides the real
            strategies inferred from the source kinds.
        synthetic1: Generator standing in for ``real1``.
        synthetic2: Generator standing in for ``real2``.

    Returns:
        ``(real_curve, synthetic_curve)``; the synthetic curve is ``None``
        without generators.

    Raises:
        PowerConfigError: If the sources differ in width, only one generator
            is given or the grid starts below the test's minimum.
    """
    if (synthetic1 is None) != (synthetic2 is None):
        raise PowerConfigError("the synthetic pairing needs a generator for both sides")
    widths = {source.dim for source in (real1, real2, synthetic1, synthetic2) if source is not None}
    if len(widths) != 1:
        raise PowerConfigError(f"sources and generators must share one width, got {sorted(widths)}")
    strategies = config.strategies or (real_strategy(real1), real_strategy(real2))
    logger.info("power curve: %s, %s vs %s, %d grid points, K=%d", config.test.name, real1.name, real2.name,
                len(config.grid), config.trials)
    with _worker_pool(config.threads) as pool:
        real = pairing_curve(real1, real2, strategies, config, pool)
        synthetic = None
        if synthetic1 is not None:
            synthetic = pairing_curve(synthetic1, synthetic2, (Strategy.SYNTHETIC, Strategy.SYNTHETIC), config, pool)
    return real, synthetic


def power_curve_fmri(dataset: TaggedDataset, tag: str, checkpoint, config: PowerConfig
                     ) -> Tuple[PowerCurve, Optional[PowerCurve]]:
    """Power curves for the presence of ``tag`` in a projected fMRI dataset.

    The real curve bootstraps rows with the tag (D1) against rows without it
    (D0). The synthetic curve samples the conditional generator with the tag
    switched on against the all-zero condition.

    Args:
        dataset: PCA scores with their tags.
        tag: The tag to test.
        checkpoint: Conditional generator over the dataset's score space, or
            ``None`` for the real curve only.
        config: Power settings.

    Raises:
        UnknownTagError: If ``tag`` is not in the dataset vocabulary.
        EmptyGroupError: If no row, or every row, carries ``tag``.
        PowerConfigError: If the checkpoint is unconditional or lacks ``tag``.
    """
    with_tag, without_tag = split_by_tag(dataset, tag)
    if with_tag.shape[0] == 0 or without_tag.shape[0] == 0:
        raise EmptyGroupError(
            f"tag {tag!r} splits the {len(dataset)} rows into {with_tag.shape[0]} and {without_tag.shape[0]}")
    real1 = EmpiricalSource(with_tag, name=tag)
    real2 = EmpiricalSource(without_tag, name=f"not {tag}")
    if config.strategies is None:
        config = replace(config, strategies=(Strategy.BOOTSTRAP, Strategy.BOOTSTRAP))
    if checkpoint is None:
        return power_curve(real1, real2, config)
    if not checkpoint.conditional or tag not in checkpoint.condition_vocab:
        raise PowerConfigError(f"checkpoint is not conditioned on tag {tag!r}")
    synthetic1 = GenerativeSource(checkpoint, condition=[tag], name=f"synthetic {tag}")
    synthetic2 = GenerativeSource(checkpoint, condition=np.zeros(len(checkpoint.condition_vocab)),
                                  name=f"synthetic not {tag}")
    return power_curve(real1, real2, config, synthetic1, synthetic2)


def smooth_values(values: Sequence[float], window: int) -> List[float]:
    """Centered moving average, truncated to the available values at the ends."""
    if window < 1 or window % 2 == 0:
        raise PowerConfigError(f"smoothing window must be a positive odd number, got {window}")
    values = np.asarray(values, dtype=np.float64)
    half = window // 2
    return [float(values[max(0, i - half):i + half + 1].mean()) for i in range(len(values))]


def smooth(curve: PowerCurve, window: int) -> PowerCurve:
    """Return ``curve`` with smoothed gammas; the raw points are kept."""
    return replace(curve, smoothed=smooth_values(curve.gammas, window))


def recommend_sample_size(curve: PowerCurve, target: float = 0.8) -> Recommendation:
    """Smallest grid n whose gamma reaches ``target``.

    The smoothed gammas are used when present, the raw ones otherwise.

    Raises:
        PowerError: If the curve has no points.
    """
    if not curve.points:
        raise PowerError("cannot recommend a sample size from an empty curve")
    basis = "smoothed" if curve.smoothed is not None else "raw"
    gammas = curve.smoothed if curve.smoothed is not None else curve.gammas
    n_required = next((n for n, gamma in zip(curve.ns, gammas) if gamma >= target), None)
    return Recommendation(target=target, n_required=n_required, basis=basis, max_gamma=float(max(gammas)))


def conservativeness(real: PowerCurve, synthetic: PowerCurve) -> dict:
    """How the synthetic curve sits relative to the real one on their common grid points.

    Returns:
        ``common_points``, ``fraction_at_or_below`` (share of common points
        where the synthetic gamma does not exceed the real one) and
        ``mean_difference`` (synthetic minus real).
    """
    real_gamma = dict(zip(real.ns, real.gammas))
    common = [(real_gamma[p.n], p.gamma) for p in synthetic.points if p.n in real_gamma]
    if not common:
        return {"common_points": 0, "fraction_at_or_below": None, "mean_difference": None}
    at_or_below = sum(s <= r for r, s in common)
    return {
        "common_points": len(common),
        "fraction_at_or_below": at_or_below / len(common),
        "mean_difference": float(np.mean([s - r for r, s in common])),
    }
