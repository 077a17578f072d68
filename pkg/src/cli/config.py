"""Run configuration.

A run is configured by one YAML document plus command-line flags; flags win.
Keys of the document are the field names of :class:`RunConfig` (dashes are
accepted in place of underscores).
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from power import PowerConfig, PowerConfigError, default_grid_start
from sampling import Strategy
from twosample import TEST_NAMES, KernelSpec, TestSpec, TwoSampleError

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

TOOL_NAME = "synthpower"
ENV_THREADS = "SYNTHPOWER_THREADS"
SCENARIOS = ("gaussian", "train", "power", "fmri", "report")
PRESETS = ("naive", "icw")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
DEFAULT_GRID_END = 500
DEFAULT_GRID_STEP = 20


def default_threads() -> int:
    """Thread count from ``SYNTHPOWER_THREADS``, 1 when unset."""
    value = os.environ.get(ENV_THREADS, "1")
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError(f"{ENV_THREADS} must be a positive integer, got {value!r}")
    if threads < 1:
        raise ConfigError(f"{ENV_THREADS} must be a positive integer, got {value!r}")
    return threads


def parse_grid(text: str) -> Tuple[int, int, int]:
    """Parse ``START:END:STEP``."""
    try:
        start, end, step = (int(part) for part in str(text).split(":"))
    except ValueError:
        raise ConfigError(f"grid must be START:END:STEP, got {text!r}")
    return start, end, step


@dataclass
class RunConfig:
    """Merged configuration of one command-line run.

    Attributes:
        scenario: The subcommand.
        out: Output directory owned by the run.
        seed: Master seed of every random stream.
        threads: Worker threads for power trials and volume reading.
        log_level: Root logging level.
        alpha: Significance level.
        trials: Trials K per grid point.
        grid: ``START:END:STEP``; defaults to max(20, d + 3):500:20.
        tests: Two-sample tests, one curve set each.
        strategies: Strategies to run; all that apply when unset.
        permutations: Permutations per kernel-test p-value.
        bandwidth: Kernel bandwidth or ``median``.
        n_locations: Test locations of the L1 statistic.
        bonferroni: Route multivariate ``t`` to per-column Welch.
        smooth_window: Odd smoothing window.
        target: Power target of recommendations and plots.
        error_budget: Largest tolerated fraction of failed trials per point.
        bootstrap_with_replacement: Classical bootstrap instead of
            subsampling.
        dim: Dimension of the simulated Gaussians.
        shift: Mean shift of the second simulated Gaussian.
        pool_size: Rows of the one-off Bootstrap pools and GAN training data
            of the simulated experiment.
        skip_gan: Leave out generators and synthetic curves.
        preset: Training preset, ``naive`` or ``icw``.
        iterations: Override of the preset's iteration count.
        batch_size: Override of the preset's batch size.
        hidden: Hidden layer width of both networks.
        trace_stride: Record the loss every this many iterations.
        dataset: F32D dataset (``train``) or first dataset (``power``).
        dataset2: Second dataset (``power``).
        checkpoint: Generator checkpoint (``fmri``) or the first one
            (``power``).
        checkpoint2: Second generator checkpoint (``power``).
        volumes: Directory of ``.nii`` volumes (``fmri``).
        sidecar: Tag sidecar of the volumes; ``tags.tsv`` in the directory
            by default.
        scores: Pre-projected F32D score file, instead of ``volumes``.
        pca_model: Saved PCA model to project with instead of fitting one.
        k: Number of principal components.
        tags: Tags whose presence is tested.
        train_inline: Train the conditional generator inside ``fmri``.
        render_slices: Render real and synthetic slices in ``fmri``.
        curves: Curve tables (``report``).
        x_range: Optional sample-size axis limits.
        y_range: Power axis limits.
    """
    scenario: str
    out: str = "runs/latest"
    seed: int = 0
    threads: int = field(default_factory=default_threads)
    log_level: str = "INFO"
    alpha: float = 0.05
    trials: int = 50
    grid: Optional[str] = None
    tests: List[str] = field(default_factory=lambda: ["t", "mmd"])
    strategies: Optional[List[str]] = None
    permutations: int = 200
    bandwidth: Union[float, str] = "median"
    n_locations: int = 10
    bonferroni: bool = False
    smooth_window: int = 5
    target: float = 0.8
    error_budget: float = 0.05
    bootstrap_with_replacement: bool = False
    dim: int = 10
    shift: float = 0.3
    pool_size: int = 1000
    skip_gan: bool = False
    preset: Optional[str] = None
    iterations: Optional[int] = None
    batch_size: Optional[int] = None
    hidden: int = 64
    trace_stride: int = 1
    dataset: Optional[str] = None
    dataset2: Optional[str] = None
    checkpoint: Optional[str] = None
    checkpoint2: Optional[str] = None
    volumes: Optional[str] = None
    sidecar: Optional[str] = None
    scores: Optional[str] = None
    pca_model: Optional[str] = None
    k: int = 10
    tags: List[str] = field(default_factory=lambda: ["visual", "auditory"])
    train_inline: bool = False
    render_slices: bool = False
    curves: List[str] = field(default_factory=list)
    x_range: Optional[List[float]] = None
    y_range: List[float] = field(default_factory=lambda: [0.0, 1.0])

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose one of {list(SCENARIOS)}")
        if str(self.log_level).upper() not in LOG_LEVELS:
            raise ConfigError(f"log level must be one of {list(LOG_LEVELS)}, got {self.log_level!r}")
        self.log_level = str(self.log_level).upper()
        if isinstance(self.bandwidth, str) and self.bandwidth != "median":
            try:
                self.bandwidth = float(self.bandwidth)
            except ValueError:
                raise ConfigError(f"bandwidth must be a positive number or 'median', got {self.bandwidth!r}")
        if isinstance(self.tests, str):
            self.tests = [self.tests]
        unknown = [name for name in self.tests if name not in TEST_NAMES]
        if unknown or not self.tests:
            raise ConfigError(f"unknown tests {unknown}; choose from {list(TEST_NAMES)}")
        if self.strategies is not None:
            if isinstance(self.strategies, str):
                self.strategies = [self.strategies]
            try:
                self.strategies = [Strategy(s).value for s in self.strategies]
            except ValueError:
                raise ConfigError(f"strategies must be among {[s.value for s in Strategy]}, got {self.strategies}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose one of {list(PRESETS)}")
        if self.grid is not None:
            parse_grid(self.grid)
        if self.threads < 1 or self.dim < 1 or self.pool_size < 1 or self.k < 1:
            raise ConfigError("threads, dim, pool_size and k must be positive")
        if isinstance(self.tags, str):
            self.tags = [self.tags]
        if isinstance(self.curves, str):
            self.curves = [self.curves]

    def validate_paths(self) -> None:
        """Check that every input the scenario reads exists.

        Raises:
            ConfigError: If a required input is missing.
        """
        required: List[Tuple[str, Optional[str]]] = []
        if self.scenario == "train":
            required.append(("dataset", self.dataset))
        elif self.scenario == "power":
            required += [("dataset", self.dataset), ("dataset2", self.dataset2)]
            if (self.checkpoint is None) != (self.checkpoint2 is None):
                raise ConfigError("the power scenario takes both checkpoint and checkpoint2, or neither")
        elif self.scenario == "fmri":
            if (self.volumes is None) == (self.scores is None):
                raise ConfigError("the fmri scenario takes exactly one of volumes and scores")
            required.append(("volumes", self.volumes) if self.volumes is not None else ("scores", self.scores))
            if self.checkpoint is None and not self.train_inline:
                raise ConfigError("the fmri scenario needs a conditional checkpoint or train_inline")
        elif self.scenario == "report":
            if not self.curves:
                raise ConfigError("the report scenario needs at least one curve table")
            required += [("curves", path) for path in self.curves]
        for name in ("checkpoint", "checkpoint2", "sidecar", "pca_model"):
            if getattr(self, name) is not None:
                required.append((name, getattr(self, name)))
        for name, path in required:
            if path is None:
                raise ConfigError(f"the {self.scenario} scenario needs {name}")
            if not Path(path).exists():
                raise ConfigError(f"{name} {path} does not exist")

    def grid_for(self, width: int, test: TestSpec) -> Tuple[int, int, int]:
        if self.grid is not None:
            return parse_grid(self.grid)
        return default_grid_start(width, test), DEFAULT_GRID_END, DEFAULT_GRID_STEP

    def test_spec(self, name: str) -> TestSpec:
        try:
            return TestSpec(name=name, kernel=KernelSpec(self.bandwidth), permutations=self.permutations,
                            bonferroni=self.bonferroni, n_locations=self.n_locations)
        except TwoSampleError as e:
            raise ConfigError(e.message) from e

    def power_config(self, test: str, width: int, strategies=None) -> PowerConfig:
        """PowerConfig for one test on ``width``-column data."""
        spec = self.test_spec(test)
        start, end, step = self.grid_for(width, spec)
        try:
            return PowerConfig(n_start=start, n_end=end, n_step=step, trials=self.trials, alpha=self.alpha,
                               test=spec, strategies=strategies, master_seed=self.seed, threads=self.threads,
                               smooth_window=self.smooth_window, error_budget=self.error_budget,
                               bootstrap_with_replacement=self.bootstrap_with_replacement, target=self.target)
        except PowerConfigError as e:
            raise ConfigError(e.message) from e

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


FIELD_NAMES = tuple(f.name for f in fields(RunConfig))


def load_config(path) -> Dict[str, Any]:
    """Read a YAML configuration document.

    A run manifest is accepted too; its echoed configuration is used, so a
    run can be repeated from its own output.

    Raises:
        ConfigError: If the file cannot be read, is not YAML or is not a
            mapping of known keys.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path} is not valid YAML: {e}") from e
    if document is None:
        return {}
    if isinstance(document, dict) and document.get("tool") == TOOL_NAME and isinstance(document.get("config"), dict):
        document = document["config"]
    if not isinstance(document, dict):
        raise ConfigError(f"config {path} must be a mapping")
    values = {str(key).replace("-", "_"): value for key, value in document.items()}
    unknown = sorted(set(values) - set(FIELD_NAMES) - {"scenario"})
    if unknown:
        raise ConfigError(f"config {path} has unknown keys {unknown}")
    return values


def build_run_config(scenario: str, file_values: Dict[str, Any], flag_values: Dict[str, Any]) -> RunConfig:
    """Merge file values and flags (flags win) into a RunConfig."""
    merged = {key: value for key, value in file_values.items() if key != "scenario"}
    merged.update({key: value for key, value in flag_values.items() if key in FIELD_NAMES and value is not None})
    merged["scenario"] = scenario
    try:
        return RunConfig(**merged)
    except TypeError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
