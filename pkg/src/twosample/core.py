"""Core two-sample test functionality.

This module implements the parametric tests (Welch, Student, Hotelling's T^2
and per-column Welch with Bonferroni), the Gaussian-kernel MMD statistics,
the permutation p-value engines and the ``run_test`` dispatcher.
"""

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .exceptions import (
    BandwidthError,
    DegenerateSampleError,
    InsufficientSamplesError,
    SingularCovarianceError,
    TwoSampleError,
    WidthMismatchError,
)
from .models import KernelSpec, Method, PermutationConfig, TestResult, TestSpec
from .special import f_survival, student_t_two_sided_p

logger = logging.getLogger(__name__)

CONDITION_THRESHOLD = 1e12
TIE_RTOL = 1e-12

StatisticFn = Callable[[np.ndarray, np.ndarray], float]


def _as_vector(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2 and values.shape[1] == 1:
        values = values[:, 0]
    if values.ndim != 1:
        raise TwoSampleError(f"expected a vector, got shape {values.shape}")
    return values


def _as_matrix(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise TwoSampleError(f"expected a sample matrix, got shape {values.shape}")
    return values


def _check_widths(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape[1] != Y.shape[1]:
        raise WidthMismatchError(X.shape[1], Y.shape[1])


def welch_t_test(x, y) -> TestResult:
    """Welch's unequal-variance t-test with Satterthwaite degrees of freedom.

    Raises:
        InsufficientSamplesError: If a group has fewer than two observations.
        DegenerateSampleError: If both groups are constant with different means.
    """
    x, y = _as_vector(x), _as_vector(y)
    n1, n2 = len(x), len(y)
    if n1 < 2 or n2 < 2:
        raise InsufficientSamplesError("Welch t-test", n1, n2, "at least 2 observations per group")
    v1, v2 = x.var(ddof=1) / n1, y.var(ddof=1) / n2
    diff = x.mean() - y.mean()
    se2 = v1 + v2
    if se2 == 0.0:
        if diff == 0.0:
            return TestResult(0.0, 1.0, Method.WELCH_T, n1, n2, {"df": float("nan")})
        raise DegenerateSampleError("both groups are constant with different means; the t statistic is infinite")
    t = diff / math.sqrt(se2)
    df = se2 ** 2 / (v1 ** 2 / (n1 - 1) + v2 ** 2 / (n2 - 1))
    return TestResult(t, student_t_two_sided_p(t, df), Method.WELCH_T, n1, n2, {"df": df})


def student_t_test(x, y) -> TestResult:
    """Student's pooled-variance t-test with n1 + n2 - 2 degrees of freedom."""
    x, y = _as_vector(x), _as_vector(y)
    n1, n2 = len(x), len(y)
    if n1 < 2 or n2 < 2:
        raise InsufficientSamplesError("Student t-test", n1, n2, "at least 2 observations per group")
    df = n1 + n2 - 2
    pooled = ((n1 - 1) * x.var(ddof=1) + (n2 - 1) * y.var(ddof=1)) / df
    diff = x.mean() - y.mean()
    se2 = pooled * (1.0 / n1 + 1.0 / n2)
    if se2 == 0.0:
        if diff == 0.0:
            return TestResult(0.0, 1.0, Method.STUDENT_T, n1, n2, {"df": df})
        raise DegenerateSampleError("both groups are constant with different means; the t statistic is infinite")
    t = diff / math.sqrt(se2)
    return TestResult(t, student_t_two_sided_p(t, df), Method.STUDENT_T, n1, n2, {"df": df})


def hotelling_t2(X, Y) -> TestResult:
    """Hotelling's two-sample T^2 test with pooled covariance.

    T^2 = (n1 n2 / (n1 + n2)) (xbar - ybar)^T S^-1 (xbar - ybar); the p-value
    comes from F(d, n1 + n2 - d - 1) applied to
    ((n1 + n2 - d - 1) / ((n1 + n2 - 2) d)) T^2.

    Raises:
        InsufficientSamplesError: If n1 + n2 - 2 <= d.
        SingularCovarianceError: If the pooled covariance has a condition
            number above 1e12.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    _check_widths(X, Y)
    (n1, d), n2 = X.shape, Y.shape[0]
    if n1 < 1 or n2 < 1 or n1 + n2 - 2 <= d:
        raise InsufficientSamplesError("Hotelling's T^2", n1, n2, f"n1 + n2 - 2 > d = {d}")
    Xc, Yc = X - X.mean(axis=0), Y - Y.mean(axis=0)
    pooled = (Xc.T @ Xc + Yc.T @ Yc) / (n1 + n2 - 2)
    condition = np.linalg.cond(pooled)
    if not np.isfinite(condition) or condition > CONDITION_THRESHOLD:
        raise SingularCovarianceError(float(condition), CONDITION_THRESHOLD)
    diff = X.mean(axis=0) - Y.mean(axis=0)
    try:
        solved = np.linalg.solve(pooled, diff)
    except np.linalg.LinAlgError as e:
        raise SingularCovarianceError(float("inf"), CONDITION_THRESHOLD) from e
    t2 = float(n1 * n2 / (n1 + n2) * diff @ solved)
    d2 = n1 + n2 - d - 1
    f = d2 / ((n1 + n2 - 2) * d) * t2
    return TestResult(t2, f_survival(f, d, d2), Method.HOTELLING_T2, n1, n2,
                      {"f": f, "df1": d, "df2": d2, "condition_number": float(condition)})


def welch_bonferroni(X, Y) -> TestResult:
    """Per-column Welch tests combined by Bonferroni: p = min(1, d * min_j p_j).

    The statistic is the t value of the column with the smallest p-value.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    _check_widths(X, Y)
    d = X.shape[1]
    results = [welch_t_test(X[:, j], Y[:, j]) for j in range(d)]
    best = min(range(d), key=lambda j: results[j].p_value)
    p = min(1.0, d * results[best].p_value)
    return TestResult(results[best].statistic, p, Method.WELCH_BONFERRONI, X.shape[0], Y.shape[0],
                      {"column": best, "columns": d})


def median_heuristic(Z) -> float:
    """Median pairwise Euclidean distance over distinct row pairs of ``Z``.

    Raises:
        BandwidthError: If ``Z`` has fewer than two rows or the median is zero.
    """
    Z = _as_matrix(Z)
    if Z.shape[0] < 2:
        raise BandwidthError("the median heuristic needs at least two rows")
    median = float(np.median(pdist(Z, "euclidean")))
    if not median > 0:
        raise BandwidthError("median pairwise distance is zero (rows are identical); use a fixed bandwidth")
    return median


def resolve_bandwidth(kernel: KernelSpec, X: np.ndarray, Y: np.ndarray) -> float:
    """Return sigma for ``kernel`` on the pooled sample of X and Y."""
    if kernel.fixed:
        return float(kernel.bandwidth)
    return median_heuristic(np.vstack([X, Y]))


def gaussian_gram(A: np.ndarray, B: np.ndarray, sigma: float) -> np.ndarray:
    """Kernel matrix exp(-||a - b||^2 / (2 sigma^2)) between the rows of A and B."""
    return np.exp(-cdist(A, B, "sqeuclidean") / (2.0 * sigma * sigma))


def mmd2_biased(X, Y, kernel: KernelSpec = KernelSpec()) -> float:
    """Biased squared MMD with a Gaussian kernel.

    (1/m^2) sum k(x, x') + (1/n^2) sum k(y, y') - (2/mn) sum k(x, y), clipped
    at zero.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    _check_widths(X, Y)
    sigma = resolve_bandwidth(kernel, X, Y)
    m, n = X.shape[0], Y.shape[0]
    xx = gaussian_gram(X, X, sigma).sum() / (m * m)
    yy = gaussian_gram(Y, Y, sigma).sum() / (n * n)
    xy = gaussian_gram(X, Y, sigma).sum() / (m * n)
    return max(0.0, float(xx + yy - 2.0 * xy))


def mmd_l1(X, Y, kernel: KernelSpec, locations) -> float:
    """L1 norm of the witness difference at the test locations.

    sum_j | mean_i k(x_i, t_j) - mean_i k(y_i, t_j) |
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    _check_widths(X, Y)
    locations = _as_matrix(locations)
    if locations.shape[0] < 1:
        raise TwoSampleError("the L1 statistic needs at least one test location")
    if locations.shape[1] != X.shape[1]:
        raise WidthMismatchError(X.shape[1], locations.shape[1])
    sigma = resolve_bandwidth(kernel, X, Y)
    witness = gaussian_gram(X, locations, sigma).mean(axis=0) - gaussian_gram(Y, locations, sigma).mean(axis=0)
    return float(np.abs(witness).sum())


def l1_test_locations(X, Y, sigma: float, rng: np.random.Generator, n_locations: int = 10) -> np.ndarray:
    """Draw test locations from the pooled sample.

    Half of the locations (rounded up) are pooled rows drawn without
    replacement; the rest are the first of those rows jittered by
    N(0, sigma^2 I / 4).
    """
    pooled = np.vstack([_as_matrix(X), _as_matrix(Y)])
    n_rows = n_locations - n_locations // 2
    picked = pooled[rng.choice(pooled.shape[0], size=n_rows, replace=pooled.shape[0] < n_rows)]
    jittered = picked[: n_locations // 2] + rng.normal(0.0, sigma / 2.0, size=(n_locations // 2, pooled.shape[1]))
    return np.vstack([picked, jittered])


def _count_extreme(permuted: np.ndarray, observed: float) -> int:
    return int(np.sum(permuted >= observed - TIE_RTOL * abs(observed)))


def permutation_pvalue(statistic_fn: StatisticFn, X, Y, config: PermutationConfig) -> float:
    """Permutation p-value of ``statistic_fn`` for the split (X, Y).

    p = (1 + #{permuted statistic >= observed}) / (B + 1). Each permutation is
    ``rng.permutation`` of the pooled rows; the first m rows form the first
    group.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    _check_widths(X, Y)
    m = X.shape[0]
    pooled = np.vstack([X, Y])
    observed = statistic_fn(X, Y)
    rng = np.random.default_rng(config.seed)
    permuted = np.empty(config.permutations)
    for b in range(config.permutations):
        order = rng.permutation(pooled.shape[0])
        permuted[b] = statistic_fn(pooled[order[:m]], pooled[order[m:]])
    return (1 + _count_extreme(permuted, observed)) / (config.permutations + 1)


def _weight_matrix(orders: np.ndarray, m: int, n: int) -> np.ndarray:
    # Column b holds 1/m on the rows sent to the first group by permutation b, -1/n elsewhere.
    weights = np.full(orders.shape, -1.0 / n)
    weights[:, :m] = 1.0 / m
    columns = np.empty_like(weights)
    np.put_along_axis(columns, orders, weights, axis=1)
    return columns.T


def _permutation_orders(rng: np.random.Generator, total: int, permutations: int) -> np.ndarray:
    return np.stack([rng.permutation(total) for _ in range(permutations)])


def indexed_permutation_test(X, Y, kernel: KernelSpec, config: PermutationConfig,
                             locations: Optional[np.ndarray] = None) -> Tuple[float, float, float]:
    """MMD permutation test on a precomputed pooled kernel matrix.

    Permutations are drawn exactly as in :func:`permutation_pvalue` with the
    same seed, and every statistic (observed included) is evaluated from
    group weight vectors w: w^T K w for the squared MMD, or
    sum_j |(W^T K_t)_j| for the L1 statistic when ``locations`` is given.

    Returns:
        ``(statistic, p_value, bandwidth)``.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    _check_widths(X, Y)
    m, n = X.shape[0], Y.shape[0]
    sigma = resolve_bandwidth(kernel, X, Y)
    pooled = np.vstack([X, Y])
    rng = np.random.default_rng(config.seed)
    orders = np.vstack([np.arange(m + n), _permutation_orders(rng, m + n, config.permutations)])
    W = _weight_matrix(orders, m, n)
    if locations is None:
        K = gaussian_gram(pooled, pooled, sigma)
        stats = np.sum(W * (K @ W), axis=0)
    else:
        Kt = gaussian_gram(pooled, _as_matrix(locations), sigma)
        stats = np.abs(W.T @ Kt).sum(axis=1)
    observed = float(stats[0])
    p = (1 + _count_extreme(stats[1:], observed)) / (config.permutations + 1)
    return observed, p, sigma


def mmd_test(X, Y, kernel: KernelSpec = KernelSpec(), config: PermutationConfig = PermutationConfig()) -> TestResult:
    """Biased squared MMD with a permutation p-value."""
    X, Y = _as_matrix(X), _as_matrix(Y)
    _, p, sigma = indexed_permutation_test(X, Y, kernel, config)
    statistic = mmd2_biased(X, Y, KernelSpec(sigma))
    return TestResult(statistic, p, Method.MMD2_BIASED, X.shape[0], Y.shape[0],
                      {"bandwidth": sigma, "permutations": config.permutations})


def mmd_l1_test(X, Y, kernel: KernelSpec = KernelSpec(), config: PermutationConfig = PermutationConfig(),
                n_locations: int = 10) -> TestResult:
    """L1 witness statistic with a permutation p-value.

    Test locations are drawn from the permutation seed before the permutations.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    _check_widths(X, Y)
    sigma = resolve_bandwidth(kernel, X, Y)
    location_rng = np.random.default_rng([config.seed, 1])
    locations = l1_test_locations(X, Y, sigma, location_rng, n_locations)
    statistic, p, _ = indexed_permutation_test(X, Y, KernelSpec(sigma), config, locations)
    return TestResult(statistic, p, Method.MMD_L1, X.shape[0], Y.shape[0],
                      {"bandwidth": sigma, "permutations": config.permutations, "locations": n_locations})


def run_test(X, Y, spec: TestSpec = TestSpec(), seed: int = 0) -> TestResult:
    """Run the test ``spec`` names on (X, Y).

    Args:
        X: First sample, one observation per row.
        Y: Second sample.
        spec: Test selection and settings.
        seed: Permutation seed for the kernel tests.

    Returns:
        The TestResult.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    _check_widths(X, Y)
    method = spec.method_for(X.shape[1])
    if method is Method.WELCH_T:
        if X.shape[1] != 1:
            raise TwoSampleError("the Welch t-test takes a single column; use hotelling or welch-bonferroni")
        return welch_t_test(X[:, 0], Y[:, 0])
    if method is Method.STUDENT_T:
        if X.shape[1] != 1:
            raise TwoSampleError("the Student t-test takes a single column")
        return student_t_test(X[:, 0], Y[:, 0])
    if method is Method.HOTELLING_T2:
        return hotelling_t2(X, Y)
    if method is Method.WELCH_BONFERRONI:
        return welch_bonferroni(X, Y)
    config = PermutationConfig(spec.permutations, seed)
    if method is Method.MMD2_BIASED:
        return mmd_test(X, Y, spec.kernel, config)
    return mmd_l1_test(X, Y, spec.kernel, config, spec.n_locations)
