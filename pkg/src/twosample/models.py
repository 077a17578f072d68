"""Data models for the twosample module.

This module defines test results, kernel and permutation settings, and the
test specification consumed by the power engine.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Union

from .exceptions import BandwidthError, TwoSampleError, UnknownTestError

MEDIAN_HEURISTIC = "median"

TEST_NAMES = ("t", "welch", "student", "hotelling", "welch-bonferroni", "mmd", "mmd-l1")


class Method(str, enum.Enum):
    """The test that produced a result."""
    WELCH_T = "welch_t"
    STUDENT_T = "student_t"
    HOTELLING_T2 = "hotelling_t2"
    WELCH_BONFERRONI = "welch_bonferroni"
    MMD2_BIASED = "mmd2_biased"
    MMD_L1 = "mmd_l1"


@dataclass
class TestResult:
    """Outcome of a two-sample test.

    Attributes:
        statistic: The test statistic.
        p_value: The p-value, in [0, 1].
        method: The test that was run.
        n1: Size of the first group.
        n2: Size of the second group.
        details: Method-specific values such as ``df``, ``bandwidth`` or
            ``permutations``.
    """
    __test__ = False

    statistic: float
    p_value: float
    method: Method
    n1: int
    n2: int
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise TwoSampleError(f"p-value {self.p_value} outside [0, 1]")

    def rejects(self, alpha: float) -> bool:
        """Return True when the null hypothesis is rejected at level ``alpha``."""
        return self.p_value < alpha


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel exp(-||a - b||^2 / (2 sigma^2)).

    Attributes:
        bandwidth: A fixed sigma > 0, or ``"median"`` for the median
            heuristic on the pooled sample.
    """
    bandwidth: Union[float, str] = MEDIAN_HEURISTIC

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth != MEDIAN_HEURISTIC:
                raise BandwidthError(f"bandwidth must be a positive number or {MEDIAN_HEURISTIC!r}")
        elif not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise BandwidthError(f"fixed bandwidth must be positive, got {self.bandwidth}")

    @property
    def fixed(self) -> bool:
        return not isinstance(self.bandwidth, str)


@dataclass(frozen=True)
class PermutationConfig:
    """Permutation test settings.

    Attributes:
        permutations: Number of permutations B.
        seed: Seed of the permutation stream.
    """
    permutations: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.permutations < 1:
            raise TwoSampleError(f"need at least one permutation, got {self.permutations}")


@dataclass(frozen=True)
class TestSpec:
    """Which test to run and how.

    Attributes:
        name: One of ``t``, ``welch``, ``student``, ``hotelling``,
            ``welch-bonferroni``, ``mmd`` or ``mmd-l1``. ``t`` is Welch on a
            single column and Hotelling's T^2 on several (per-column Welch
            with Bonferroni when ``bonferroni`` is set).
        kernel: Kernel of the MMD tests.
        permutations: Permutations per MMD p-value.
        bonferroni: Route multivariate ``t`` to per-column Welch.
        n_locations: Test locations of the L1 statistic.
    """
    __test__ = False

    name: str = "t"
    kernel: KernelSpec = KernelSpec()
    permutations: int = 200
    bonferroni: bool = False
    n_locations: int = 10

    def __post_init__(self):
        if self.name not in TEST_NAMES:
            raise UnknownTestError(f"unknown test {self.name!r}; choose one of {list(TEST_NAMES)}")
        if self.permutations < 1 or self.n_locations < 1:
            raise TwoSampleError("permutations and n_locations must be >= 1")

    def method_for(self, width: int) -> Method:
        """Return the concrete method for data with ``width`` columns."""
        if self.name == "t":
            if width == 1:
                return Method.WELCH_T
            return Method.WELCH_BONFERRONI if self.bonferroni else Method.HOTELLING_T2
        return {
            "welch": Method.WELCH_T,
            "student": Method.STUDENT_T,
            "hotelling": Method.HOTELLING_T2,
            "welch-bonferroni": Method.WELCH_BONFERRONI,
            "mmd": Method.MMD2_BIASED,
            "mmd-l1": Method.MMD_L1,
        }[self.name]

    def minimum_group_size(self, width: int) -> int:
        """Smallest per-group size the test accepts for ``width`` columns."""
        if self.method_for(width) is Method.HOTELLING_T2:
            # n1 + n2 - 2 > d with n1 = n2
            return max(2, width // 2 + 2)
        return 2
