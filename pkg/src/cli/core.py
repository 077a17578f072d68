"""Command-line entry point.

Subcommands::

    synthpower gaussian   simulated Gaussian experiment, real vs synthetic curves
    synthpower train      train a generator on an F32D dataset
    synthpower power      real (and synthetic) curves for two F32D datasets
    synthpower fmri       tag-presence curves for a directory of volumes
    synthpower report     plot and summarize existing curve tables

Every run writes into a staging directory that replaces ``--out`` only when
all stages succeed.
"""

import argparse
import json
import logging
import os
import shutil
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from autodiff import AutodiffError
from gan import GANError, ModelCheckpoint, load_checkpoint, preset, save_checkpoint
from gan import train as train_generator
from neuro import NeuroError, Volume, ingest_directory, render_slices, reshape, synthetic_volumes
from pca import PCAError, load_model, save_model, transform
from pca import fit as fit_pca
from power import (
    CurveFormatError,
    PowerCurve,
    PowerError,
    conservativeness,
    pairing_curve,
    power_curve,
    power_curve_fmri,
    read_curve_csv,
    write_curve_csv,
)
from sampling import (
    EmpiricalSource,
    GaussianSource,
    GenerativeSource,
    SamplingError,
    Strategy,
    TaggedDataset,
    derive_seed,
    draw,
    read_f32d,
    read_tagged_dataset,
    write_tagged_dataset,
)
from twosample import TwoSampleError

from . import __version__
from .config import LOG_LEVELS, RunConfig, build_run_config, load_config
from .exceptions import CLIError, ConfigError, ReportError
from .models import MANIFEST_NAME, RunRecord
from .report import loss_figure, power_figure, save_svg, summary, write_loss_trace_csv

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
STAGES = {2: "config", 3: "ingest", 4: "train", 5: "test", 6: "report"}
HANDLED_ERRORS = (CLIError, AutodiffError, GANError, TwoSampleError, SamplingError, PowerError, NeuroError, PCAError)


class OutputDirectory:
    """An output directory owned by one run.

    Files are written to a hidden staging directory next to the target and
    moved into place when the run succeeds. An existing target must be empty
    or the output of an earlier run (it holds a manifest); it is replaced.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.staging = self.path.parent / f".{self.path.name}.staging"

    def _check_target(self) -> None:
        if not self.path.exists():
            return
        if not self.path.is_dir():
            raise ConfigError(f"output path {self.path} is not a directory")
        if any(self.path.iterdir()) and not (self.path / MANIFEST_NAME).exists():
            raise ConfigError(f"output directory {self.path} is not empty and holds no run manifest")

    @contextmanager
    def transaction(self) -> Iterator[Path]:
        """Context manager for one run's outputs.

        Yields:
            The staging directory to write into.

        Raises:
            ConfigError: If the target cannot be owned by this run.
            ReportError: If the finished outputs cannot be moved into place.
        """
        self._check_target()
        try:
            if self.staging.exists():
                shutil.rmtree(self.staging)
            self.staging.mkdir(parents=True)
        except OSError as e:
            raise ConfigError(f"cannot create staging directory {self.staging}: {e.strerror}") from e
        try:
            yield self.staging
        except BaseException:
            shutil.rmtree(self.staging, ignore_errors=True)
            raise
        try:
            if self.path.exists():
                shutil.rmtree(self.path)
            os.replace(self.staging, self.path)
        except OSError as e:
            shutil.rmtree(self.staging, ignore_errors=True)
            raise ReportError(f"cannot move outputs into {self.path}: {e.strerror}") from e
        logger.info("outputs written to %s", self.path)


def _write_curve(record: RunRecord, out: Path, curve: PowerCurve, stem: str) -> None:
    relpath = f"curves/{stem}.csv"
    (out / "curves").mkdir(exist_ok=True)
    write_curve_csv(curve, out / relpath)
    record.add_curve(curve, relpath)


def _write_figure(record: RunRecord, out: Path, curves: Sequence[PowerCurve], stem: str, title: str) -> None:
    relpath = f"figures/{stem}.svg"
    (out / "figures").mkdir(exist_ok=True)
    fig = power_figure(curves, target=record.config.target, title=title, x_range=record.config.x_range,
                       y_range=record.config.y_range)
    save_svg(fig, out / relpath)
    record.artifacts.append(relpath)


def _train_config_overrides(config: RunConfig, train_config):
    overrides = {"trace_stride": config.trace_stride}
    if config.iterations is not None:
        overrides["iterations"] = config.iterations
    if config.batch_size is not None:
        overrides["batch_size"] = config.batch_size
    return replace(train_config, **overrides)


def _train(config: RunConfig, record: RunRecord, out: Path, name: str, data: np.ndarray, preset_name: str,
           seed: int, dataset: Optional[TaggedDataset] = None) -> ModelCheckpoint:
    vocab = dataset.vocabulary if dataset is not None else None
    spec_g, spec_d, train_config = preset(preset_name, data.shape[1], condition_vocab=vocab, seed=seed,
                                          hidden=config.hidden)
    train_config = _train_config_overrides(config, train_config)
    conditions = dataset.condition_matrix(vocab) if dataset is not None else None
    logger.info("training %s (%s preset, %d iterations, batch %d) on %d rows", name, preset_name,
                train_config.iterations, train_config.batch_size, data.shape[0])
    checkpoint = train_generator(data, spec_g, spec_d, train_config, conditions=conditions)
    for relpath in (f"{name}.json", f"{name}_loss.csv", f"{name}_loss.svg"):
        record.artifacts.append(relpath)
    save_checkpoint(checkpoint, out / f"{name}.json")
    write_loss_trace_csv(checkpoint.loss_trace, out / f"{name}_loss.csv")
    save_svg(loss_figure(checkpoint.loss_trace, title=f"{Path(name).name} losses"), out / f"{name}_loss.svg")
    return checkpoint


def _strategies(config: RunConfig, available: Sequence[Strategy]) -> List[Strategy]:
    if config.strategies is None:
        return list(available)
    chosen = [Strategy(s) for s in config.strategies]
    missing = [s.value for s in chosen if s not in available]
    if missing:
        raise ConfigError(f"strategies {missing} are not available in this run")
    return chosen


def cmd_gaussian(config: RunConfig, out: Path, record: RunRecord) -> None:
    """Simulated experiment on N(0, I) against N(shift * 1, I).

    The Bootstrap pools are drawn once from each Gaussian and double as the
    training data of the two naive GANs.
    """
    d = config.dim
    sources = (GaussianSource(np.zeros(d), np.ones(d), name="D1"),
               GaussianSource(np.full(d, config.shift), np.ones(d), name="D2"))
    available = [Strategy.RESAMPLE, Strategy.BOOTSTRAP] + ([] if config.skip_gan else [Strategy.SYNTHETIC])
    strategies = _strategies(config, available)

    pools, generators = [], []
    for k, source in enumerate(sources, start=1):
        seed = derive_seed(config.seed, "pool", k)
        record.seeds[f"pool_{source.name}"] = seed
        pools.append(EmpiricalSource(draw(source, Strategy.RESAMPLE, config.pool_size, seed), name=f"{source.name} pool"))
    if Strategy.SYNTHETIC in strategies:
        (out / "checkpoints").mkdir()
        for k, (source, pool) in enumerate(zip(sources, pools), start=1):
            seed = derive_seed(config.seed, "train", k)
            record.seeds[f"train_{source.name}"] = seed
            checkpoint = _train(config, record, out, f"checkpoints/generator_{source.name}", pool.pool,
                                config.preset or "naive", seed)
            generators.append(GenerativeSource(checkpoint, name=f"G{k}"))

    pairings = {
        Strategy.RESAMPLE: sources,
        Strategy.BOOTSTRAP: tuple(pools),
        Strategy.SYNTHETIC: tuple(generators),
    }
    for test in config.tests:
        power_config = config.power_config(test, d)
        curves = {}
        for strategy in strategies:
            src1, src2 = pairings[strategy]
            curve = pairing_curve(src1, src2, (strategy, strategy), power_config)
            _write_curve(record, out, curve, f"{test}_{strategy.value}".replace("-", "_"))
            curves[strategy] = curve
        if Strategy.SYNTHETIC in curves:
            record.notes.setdefault("conservativeness", {})[test] = {
                strategy.value: conservativeness(curve, curves[Strategy.SYNTHETIC])
                for strategy, curve in curves.items() if strategy is not Strategy.SYNTHETIC}
        _write_figure(record, out, list(curves.values()), test.replace("-", "_"),
                      f"{test}: N(0, I{d}) vs N({config.shift}, I{d})")


def cmd_train(config: RunConfig, out: Path, record: RunRecord) -> None:
    """Train a generator on one dataset; conditional when the dataset has tags."""
    dataset = read_tagged_dataset(config.dataset)
    conditional = bool(dataset.vocabulary)
    preset_name = config.preset or ("icw" if conditional else "naive")
    seed = derive_seed(config.seed, "train")
    record.seeds["train"] = seed
    record.notes["training"] = {"preset": preset_name, "rows": len(dataset), "columns": dataset.rows.shape[1],
                                "conditions": list(dataset.vocabulary)}
    _train(config, record, out, "checkpoint", dataset.rows, preset_name, seed,
           dataset=dataset if conditional else None)


def cmd_power(config: RunConfig, out: Path, record: RunRecord) -> None:
    """Bootstrap curves of two datasets, plus synthetic curves when generators are given."""
    stems = (Path(config.dataset).stem, Path(config.dataset2).stem)
    real = (EmpiricalSource(read_f32d(config.dataset), name=stems[0]),
            EmpiricalSource(read_f32d(config.dataset2), name=stems[1]))
    synthetic = (None, None)
    if config.checkpoint is not None:
        synthetic = tuple(GenerativeSource(load_checkpoint(path), name=f"synthetic {stem}")
                          for path, stem in zip((config.checkpoint, config.checkpoint2), stems))
    for test in config.tests:
        power_config = config.power_config(test, real[0].dim, strategies=(Strategy.BOOTSTRAP, Strategy.BOOTSTRAP))
        real_curve, synthetic_curve = power_curve(real[0], real[1], power_config, *synthetic)
        stem = test.replace("-", "_")
        _write_curve(record, out, real_curve, f"{stem}_bootstrap")
        curves = [real_curve]
        if synthetic_curve is not None:
            _write_curve(record, out, synthetic_curve, f"{stem}_synthetic")
            record.notes.setdefault("conservativeness", {})[test] = conservativeness(real_curve, synthetic_curve)
            curves.append(synthetic_curve)
        _write_figure(record, out, curves, stem, f"{test}: {stems[0]} vs {stems[1]}")


def _render(config: RunConfig, out: Path, record: RunRecord, dataset: TaggedDataset, dims, model,
            checkpoint: ModelCheckpoint) -> None:
    directory = out / "slices"
    middle = dims[2] // 2
    for tag in config.tags:
        index = next(i for i, tags in enumerate(dataset.tags) if tag in tags)
        real = Volume(dims=dims, voxels=reshape(dataset.rows[index], dims).astype(np.float32), name=dataset.keys[index])
        seed = derive_seed(config.seed, "render", tag)
        record.seeds[f"render_{tag}"] = seed
        synthetic = synthetic_volumes(checkpoint, model, dims, 1, condition=[tag], seed=seed)[0]
        for volume, stem in ((real, f"real_{tag}"), (synthetic, f"synthetic_{tag}")):
            for path in render_slices(volume, 2, [middle], directory, stem=stem):
                record.artifacts.append(path.relative_to(out).as_posix())


def cmd_fmri(config: RunConfig, out: Path, record: RunRecord) -> None:
    """Tag-presence power curves in PCA score space.

    Volumes are ingested, normalized, flattened and projected on ``k``
    principal components fitted on the real volumes (or a saved model); a
    pre-projected score file skips those steps.
    """
    dims = model = volume_rows = None
    if config.scores is not None:
        dataset = read_tagged_dataset(config.scores)
    else:
        volumes = ingest_directory(config.volumes, sidecar=config.sidecar, threads=config.threads)
        dims, volume_rows = volumes.dims, volumes.dataset
        if volumes.nan_counts:
            record.notes["nan_voxels_replaced"] = dict(sorted(volumes.nan_counts.items()))
        model = load_model(config.pca_model) if config.pca_model is not None else fit_pca(volume_rows.rows, config.k)
        save_model(model, out / "pca_model.json")
        record.artifacts.append("pca_model.json")
        dataset = TaggedDataset(transform(model, volume_rows.rows), volume_rows.tags, volume_rows.vocabulary,
                                keys=volume_rows.keys)
        write_tagged_dataset(dataset, out / "scores.f32d")
        record.artifacts += ["scores.f32d", "scores.tags"]
        record.notes["pca"] = {"components": int(model.components.shape[0]),
                               "explained_variance": float(np.sum(model.eigenvalues) / model.total_variance)
                               if model.total_variance > 0 else None}
    missing = [tag for tag in config.tags if tag not in dataset.vocabulary]
    if missing:
        raise ConfigError(f"tags {missing} are not in the dataset vocabulary {dataset.vocabulary}")
    record.notes["tag_counts"] = dataset.tag_counts()

    if config.checkpoint is not None:
        checkpoint = load_checkpoint(config.checkpoint)
    else:
        seed = derive_seed(config.seed, "train")
        record.seeds["train"] = seed
        checkpoint = _train(config, record, out, "checkpoint", dataset.rows, config.preset or "icw", seed,
                            dataset=dataset)

    for tag in config.tags:
        for test in config.tests:
            power_config = config.power_config(test, dataset.rows.shape[1])
            real_curve, synthetic_curve = power_curve_fmri(dataset, tag, checkpoint, power_config)
            stem = f"{tag}_{test}".replace("-", "_")
            _write_curve(record, out, real_curve, f"{stem}_bootstrap")
            _write_curve(record, out, synthetic_curve, f"{stem}_synthetic")
            record.notes.setdefault("conservativeness", {}).setdefault(tag, {})[test] = \
                conservativeness(real_curve, synthetic_curve)
            _write_figure(record, out, [real_curve, synthetic_curve], stem, f"{test}: {tag} vs not {tag}")

    if config.render_slices:
        if model is None:
            logger.warning("slices need ingested volumes; nothing rendered from a score file")
        else:
            _render(config, out, record, volume_rows, dims, model, checkpoint)


def cmd_report(config: RunConfig, out: Path, record: RunRecord) -> None:
    """Plot curve tables together and summarize their recommendations."""
    curves = []
    for path in config.curves:
        try:
            curves.append(read_curve_csv(path))
        except CurveFormatError as e:
            raise ReportError(f"{path}: {e.message}") from e
    save_svg(power_figure(curves, target=config.target, x_range=config.x_range, y_range=config.y_range),
             out / "report.svg")
    (out / "summary.json").write_text(json.dumps(summary(curves, config.target), sort_keys=True, indent=2) + "\n",
                                      encoding="utf-8")
    record.artifacts += ["report.svg", "summary.json"]


COMMANDS = {
    "gaussian": cmd_gaussian,
    "train": cmd_train,
    "power": cmd_power,
    "fmri": cmd_fmri,
    "report": cmd_report,
}


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="YAML configuration file or the manifest of an earlier run")
    parser.add_argument("--seed", type=int, help="Master seed (default: 0)")
    parser.add_argument("--out", help="Output directory (default: runs/latest)")
    parser.add_argument("--threads", type=int, help="Worker threads (default: $SYNTHPOWER_THREADS or 1)")
    parser.add_argument("--log-level", choices=LOG_LEVELS, help="Logging level (default: INFO)")
    parser.add_argument("--alpha", type=float, help="Significance level (default: 0.05)")
    parser.add_argument("--k-trials", dest="trials", type=int, help="Trials per grid point (default: 50)")
    parser.add_argument("--grid", help="Sample-size grid START:END:STEP (default: max(20, d+3):500:20)")
    parser.add_argument("--test", dest="tests", action="append",
                        help="Test to run; repeat for several (default: t and mmd)")
    parser.add_argument("--strategy", dest="strategies", action="append",
                        choices=[s.value for s in Strategy], help="Strategy to run; repeat for several")
    parser.add_argument("--permutations", type=int, help="Permutations per kernel test (default: 200)")
    parser.add_argument("--bandwidth", help="Kernel bandwidth or 'median' (default: median)")
    parser.add_argument("--n-locations", type=int, help="Test locations of mmd-l1 (default: 10)")
    parser.add_argument("--bonferroni", action="store_true", default=None,
                        help="Use per-column Welch with Bonferroni instead of Hotelling for t")
    parser.add_argument("--smooth-window", type=int, help="Odd smoothing window (default: 5)")
    parser.add_argument("--target", type=float, help="Power target (default: 0.8)")
    parser.add_argument("--error-budget", type=float, help="Tolerated fraction of failed trials (default: 0.05)")
    parser.add_argument("--bootstrap-with-replacement", action="store_true", default=None,
                        help="Classical bootstrap instead of subsampling the pool")
    parser.add_argument("--preset", choices=("naive", "icw"), help="Training preset")
    parser.add_argument("--iterations", type=int, help="Override the preset's training iterations")
    parser.add_argument("--batch-size", type=int, help="Override the preset's batch size")
    parser.add_argument("--hidden", type=int, help="Hidden layer width (default: 64)")
    parser.add_argument("--trace-stride", type=int, help="Record the loss every N iterations (default: 1)")
    parser.add_argument("--x-range", type=float, nargs=2, metavar=("MIN", "MAX"), help="Sample-size axis limits")
    parser.add_argument("--y-range", type=float, nargs=2, metavar=("MIN", "MAX"), help="Power axis limits")
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="synthpower", description="Power analysis with real and synthetic data")
    commands = parser.add_subparsers(dest="command", required=True)

    gaussian = commands.add_parser("gaussian", parents=[common], help="Simulated Gaussian experiment")
    gaussian.add_argument("--dim", type=int, help="Dimension (default: 10)")
    gaussian.add_argument("--shift", type=float, help="Mean shift of D2 (default: 0.3)")
    gaussian.add_argument("--pool-size", type=int, help="Rows of each Bootstrap pool (default: 1000)")
    gaussian.add_argument("--skip-gan", action="store_true", default=None, help="Only Resample and Bootstrap curves")

    train = commands.add_parser("train", parents=[common], help="Train a generator")
    train.add_argument("--dataset", help="F32D dataset; a .tags sidecar makes the model conditional")

    power = commands.add_parser("power", parents=[common], help="Curves for two datasets")
    power.add_argument("--dataset1", dest="dataset", help="First F32D dataset")
    power.add_argument("--dataset2", help="Second F32D dataset")
    power.add_argument("--checkpoint1", dest="checkpoint", help="Generator of the first dataset")
    power.add_argument("--checkpoint2", help="Generator of the second dataset")

    fmri = commands.add_parser("fmri", parents=[common], help="Tag-presence curves for fMRI volumes")
    fmri.add_argument("--volumes", help="Directory of .nii volumes")
    fmri.add_argument("--sidecar", help="Tag sidecar (default: tags.tsv in the volume directory)")
    fmri.add_argument("--scores", help="Pre-projected F32D scores instead of volumes")
    fmri.add_argument("--pca-model", help="Saved PCA model to project with")
    fmri.add_argument("--k", type=int, help="Principal components (default: 10)")
    fmri.add_argument("--tag", dest="tags", action="append", help="Tag to test; repeat for several")
    fmri.add_argument("--checkpoint", help="Conditional generator checkpoint")
    fmri.add_argument("--train-inline", action="store_true", default=None,
                      help="Train the conditional generator as part of the run")
    fmri.add_argument("--render-slices", action="store_true", default=None,
                      help="Render middle slices of real and synthetic volumes")

    report = commands.add_parser("report", parents=[common], help="Plot existing curve tables")
    report.add_argument("curves", nargs="+", help="Curve CSV tables")
    return parser


def run(config: RunConfig) -> None:
    """Run one scenario into its output directory."""
    config.validate_paths()
    record = RunRecord(config=config, version=__version__, seeds={"master": config.seed})
    with OutputDirectory(config.out).transaction() as staging:
        COMMANDS[config.scenario](config, staging, record)
        manifest = json.dumps(record.to_manifest(), sort_keys=True, indent=2) + "\n"
        (staging / MANIFEST_NAME).write_text(manifest, encoding="utf-8")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level or "INFO", format=LOG_FORMAT)
    try:
        file_values: Dict = load_config(args.config) if args.config else {}
        flags = {key: value for key, value in vars(args).items() if key not in ("command", "config")}
        config = build_run_config(args.command, file_values, flags)
        logging.getLogger().setLevel(config.log_level)
        run(config)
    except HANDLED_ERRORS as e:
        logger.error("%s stage failed: %s", STAGES.get(e.code, "run"), e.message)
        return e.code
    except OSError as e:
        logger.error("report stage failed: %s", e)
        return ReportError(str(e)).code
    return 0
