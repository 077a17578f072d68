"""Data models for the power module.

This module defines the power-analysis settings, curve points, curves and
sample-size recommendations.
"""

import hashlib
import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from sampling import Strategy
from twosample import TestSpec

from .exceptions import PowerConfigError

DEFAULT_TARGET = 0.8
MIN_GRID_START = 20


@dataclass(frozen=True)
class PowerConfig:
    """Settings of a power analysis.

    ``n`` is the per-group sample size: each of the two replicates of a trial
    has ``n`` rows.

    Attributes:
        n_start: First grid point.
        n_end: Last grid point (inclusive when on the step).
        n_step: Grid step.
        trials: Trials K per grid point.
        alpha: Significance level.
        test: The two-sample test.
        strategies: Strategy of each side of the real pairing; ``None`` picks
            Resample for Gaussian sources and Bootstrap for pools.
        master_seed: Root of every derived seed.
        threads: Worker threads for trials; does not change results.
        smooth_window: Odd moving-average window for smoothed curves.
        error_budget: Largest tolerated fraction of failed trials per point.
        bootstrap_with_replacement: Classical bootstrap instead of
            subsampling the pool.
        target: Power target of the sample-size recommendation.
    """
    n_start: int = MIN_GRID_START
    n_end: int = 500
    n_step: int = 20
    trials: int = 50
    alpha: float = 0.05
    test: TestSpec = TestSpec()
    strategies: Optional[Tuple[Strategy, Strategy]] = None
    master_seed: int = 0
    threads: int = 1
    smooth_window: int = 5
    error_budget: float = 0.05
    bootstrap_with_replacement: bool = False
    target: float = DEFAULT_TARGET

    def __post_init__(self):
        if self.n_start < 1 or self.n_step < 1 or self.n_end < self.n_start:
            raise PowerConfigError(
                f"invalid grid {self.n_start}:{self.n_end}:{self.n_step}; need 1 <= start <= end and step >= 1")
        if self.trials < 1:
            raise PowerConfigError(f"need at least one trial per point, got {self.trials}")
        if not 0.0 < self.alpha < 1.0:
            raise PowerConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.threads < 1:
            raise PowerConfigError(f"threads must be >= 1, got {self.threads}")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise PowerConfigError(f"smoothing window must be a positive odd number, got {self.smooth_window}")
        if not 0.0 <= self.error_budget < 1.0:
            raise PowerConfigError(f"error budget must lie in [0, 1), got {self.error_budget}")
        if not 0.0 <= self.target <= 1.0:
            raise PowerConfigError(f"power target must lie in [0, 1], got {self.target}")
        if self.strategies is not None:
            object.__setattr__(self, "strategies", tuple(Strategy(s) for s in self.strategies))
            if len(self.strategies) != 2:
                raise PowerConfigError("a strategy pairing names exactly two strategies")

    @property
    def grid(self) -> List[int]:
        return list(range(self.n_start, self.n_end + 1, self.n_step))

    @property
    def permutations(self) -> int:
        return self.test.permutations

    def to_dict(self) -> dict:
        return {
            "n_start": self.n_start,
            "n_end": self.n_end,
            "n_step": self.n_step,
            "trials": self.trials,
            "alpha": self.alpha,
            "test": {
                "name": self.test.name,
                "bandwidth": self.test.kernel.bandwidth,
                "permutations": self.test.permutations,
                "bonferroni": self.test.bonferroni,
                "n_locations": self.test.n_locations,
            },
            "strategies": [s.value for s in self.strategies] if self.strategies else None,
            "master_seed": self.master_seed,
            "threads": self.threads,
            "smooth_window": self.smooth_window,
            "error_budget": self.error_budget,
            "bootstrap_with_replacement": self.bootstrap_with_replacement,
            "target": self.target,
        }

    def fingerprint(self) -> str:
        """Hex digest of every setting that affects results (threads excluded)."""
        settings = self.to_dict()
        del settings["threads"]
        return hashlib.blake2b(json.dumps(settings, sort_keys=True).encode("utf-8"), digest_size=16).hexdigest()


def default_grid_start(width: int, test: TestSpec = TestSpec()) -> int:
    """First grid point for ``width``-column data: max(20, d + 3), at least the test's minimum."""
    return max(MIN_GRID_START, width + 3, test.minimum_group_size(width))


@dataclass(frozen=True)
class PowerCurvePoint:
    """Estimated power at one sample size.

    Attributes:
        n: Per-group sample size.
        gamma: Fraction of valid trials with p < alpha.
        rejections: Number of rejecting trials.
        trials: Number of valid trials K.
        ci_low: Lower end of the Wilson 95% interval.
        ci_high: Upper end of the Wilson 95% interval.
        errors_excluded: Trials that raised a test error and were excluded.
    """
    n: int
    gamma: float
    rejections: int
    trials: int
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    errors_excluded: int = 0


@dataclass(frozen=True)
class CurveLabel:
    """What a curve was computed from.

    Attributes:
        test: Test name.
        strategy: Strategy of the pairing (``real`` pairings name the real
            strategy, synthetic ones ``synthetic``).
        sources: Names of the two sources.
    """
    test: str
    strategy: str
    sources: Tuple[str, str] = ("D1", "D2")

    @property
    def slug(self) -> str:
        return f"{self.test}_{self.strategy}".replace("-", "_")


@dataclass
class PowerCurve:
    """Power estimates over a grid.

    Attributes:
        label: Test, strategy and sources.
        points: Points in increasing ``n``.
        smoothed: Smoothed gammas parallel to ``points``, if computed.
        fingerprint: Fingerprint of the producing configuration.
        skipped: Grid points left out because a pool was too small.
    """
    label: CurveLabel
    points: List[PowerCurvePoint] = field(default_factory=list)
    smoothed: Optional[List[float]] = None
    fingerprint: str = ""
    skipped: List[int] = field(default_factory=list)

    @property
    def ns(self) -> List[int]:
        return [p.n for p in self.points]

    @property
    def gammas(self) -> List[float]:
        return [p.gamma for p in self.points]


@dataclass(frozen=True)
class Recommendation:
    """Smallest grid sample size reaching the power target.

    Attributes:
        target: The power target.
        n_required: Smallest grid ``n`` whose gamma reaches the target, or
            ``None`` when no point does.
        basis: ``smoothed`` or ``raw``.
        max_gamma: Largest gamma on the curve under the same basis.
    """
    target: float
    n_required: Optional[int]
    basis: str
    max_gamma: float

    def to_dict(self) -> dict:
        return {"target": self.target, "n_required": self.n_required, "basis": self.basis,
                "max_gamma": self.max_gamma}
