"""Command-line interface and reporting.

This package configures and runs the simulated Gaussian experiment, generator
training, two-dataset power analysis, the fMRI tag pipeline and curve reports,
and writes their tables, figures and run manifests.
"""

__version__ = '1.0.0'
__all__ = [
    'RunConfig', 'RunRecord', 'OutputDirectory', 'load_config', 'build_run_config', 'default_threads',
    'power_figure', 'loss_figure', 'save_svg', 'summary', 'write_loss_trace_csv',
    'cmd_gaussian', 'cmd_train', 'cmd_power', 'cmd_fmri', 'cmd_report', 'build_parser', 'run', 'main',
    'CLIError', 'ConfigError', 'ReportError',
]

from .config import RunConfig, build_run_config, default_threads, load_config
from .core import (
    OutputDirectory,
    build_parser,
    cmd_fmri,
    cmd_gaussian,
    cmd_power,
    cmd_report,
    cmd_train,
    main,
    run,
)
from .exceptions import CLIError, ConfigError, ReportError
from .models import RunRecord
from .report import loss_figure, power_figure, save_svg, summary, write_loss_trace_csv
