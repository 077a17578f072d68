"""
Synthetic power analysis.

This package estimates the power of two-sample tests over a sample-size
grid from Gaussian sources, fixed pools or trained generators, smooths the
curves, recommends sample sizes and reads and writes curve tables.
"""

__version__ = '1.0.0'
__all__ = [
    'PowerConfig', 'PowerCurvePoint', 'PowerCurve', 'CurveLabel', 'Recommendation', 'default_grid_start',
    'wilson_interval', 'real_strategy', 'estimate_power', 'pairing_curve', 'power_curve', 'power_curve_fmri',
    'smooth', 'smooth_values', 'recommend_sample_size', 'conservativeness',
    'COLUMNS', 'format_curve_csv', 'write_curve_csv', 'parse_curve_csv', 'read_curve_csv',
    'PowerError', 'PowerConfigError', 'ErrorBudgetExceededError', 'EmptyGroupError', 'CurveFormatError',
]

from .core import (
    conservativeness,
    estimate_power,
    pairing_curve,
    power_curve,
    power_curve_fmri,
    real_strategy,
    recommend_sample_size,
    smooth,
    smooth_values,
    wilson_interval,
)
from .exceptions import CurveFormatError, EmptyGroupError, ErrorBudgetExceededError, PowerConfigError, PowerError
from .models import CurveLabel, PowerConfig, PowerCurve, PowerCurvePoint, Recommendation, default_grid_start
from .table import COLUMNS, format_curve_csv, parse_curve_csv, read_curve_csv, write_curve_csv
