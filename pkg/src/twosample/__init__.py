"""
Two-sample tests.

This package provides the parametric tests (Welch, Student, Hotelling's T^2),
Gaussian-kernel MMD statistics with permutation p-values, and the special
functions used for t and F tail probabilities.
"""

__version__ = '1.0.0'
__all__ = [
    'TestResult', 'KernelSpec', 'PermutationConfig', 'TestSpec', 'Method', 'TEST_NAMES',
    'welch_t_test', 'student_t_test', 'hotelling_t2', 'welch_bonferroni',
    'median_heuristic', 'gaussian_gram', 'mmd2_biased', 'mmd_l1', 'l1_test_locations',
    'permutation_pvalue', 'indexed_permutation_test', 'mmd_test', 'mmd_l1_test', 'run_test',
    'log_gamma', 'regularized_incomplete_beta', 'student_t_two_sided_p', 'f_survival',
    'TwoSampleError', 'InsufficientSamplesError', 'DegenerateSampleError', 'SingularCovarianceError',
    'WidthMismatchError', 'BandwidthError', 'SpecialFunctionDomainError', 'ConvergenceError',
    'UnknownTestError',
]

from .core import (
    gaussian_gram,
    hotelling_t2,
    indexed_permutation_test,
    l1_test_locations,
    median_heuristic,
    mmd2_biased,
    mmd_l1,
    mmd_l1_test,
    mmd_test,
    permutation_pvalue,
    run_test,
    student_t_test,
    welch_bonferroni,
    welch_t_test,
)
from .exceptions import (
    BandwidthError,
    ConvergenceError,
    DegenerateSampleError,
    InsufficientSamplesError,
    SingularCovarianceError,
    SpecialFunctionDomainError,
    TwoSampleError,
    UnknownTestError,
    WidthMismatchError,
)
from .models import TEST_NAMES, KernelSpec, Method, PermutationConfig, TestResult, TestSpec
from .special import f_survival, log_gamma, regularized_incomplete_beta, student_t_two_sided_p
