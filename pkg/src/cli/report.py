"""Figures and summaries of power curves and training losses.

Figures are written as SVG. Rendering is pinned (fixed figure size and dpi,
fixed hash salt, no date metadata, text kept as text) so identical inputs give
identical bytes.
"""

import csv
import io
import logging
import os
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from gan import LossTrace  # noqa: E402
from power import PowerCurve, recommend_sample_size  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

DPI = 72
FIGSIZE = (8.0, 5.0)
TARGET_LINE_ID = "target-line"
SVG_RC = {"svg.hashsalt": "synthpower", "svg.fonttype": "none"}
LOSS_COLUMNS = ("iteration", "critic", "generator")


def _legend_label(curve: PowerCurve) -> str:
    label = curve.label
    if label.strategy:
        return f"{label.test} / {label.strategy}"
    return label.test


def power_figure(curves: Sequence[PowerCurve], target: float = 0.8, title: Optional[str] = None,
                 x_range: Optional[Sequence[float]] = None, y_range: Sequence[float] = (0.0, 1.0)) -> Figure:
    """Plot power against per-group sample size.

    Each curve is drawn from its smoothed gammas when present, otherwise the
    raw ones, with the Wilson band shaded where the table has interval ends.
    A red dashed line marks the power target.
    """
    fig = Figure(figsize=FIGSIZE, dpi=DPI)
    fig.subplots_adjust(left=0.1, right=0.97, bottom=0.12, top=0.92)
    ax = fig.add_subplot(1, 1, 1)
    for curve in curves:
        gammas = curve.smoothed if curve.smoothed is not None else curve.gammas
        lines = ax.plot(curve.ns, gammas, marker="o", markersize=3, label=_legend_label(curve))
        if curve.points and all(p.ci_low is not None and p.ci_high is not None for p in curve.points):
            ax.fill_between(curve.ns, [p.ci_low for p in curve.points], [p.ci_high for p in curve.points],
                            color=lines[0].get_color(), alpha=0.2, linewidth=0)
    ax.axhline(y=target, color="r", linestyle="--", linewidth=1.0, gid=TARGET_LINE_ID)
    ax.set_ylim(*y_range)
    if x_range is not None:
        ax.set_xlim(*x_range)
    ax.set_xlabel("Sample size n (per group)")
    ax.set_ylabel("Power")
    if title:
        ax.set_title(title)
    if curves:
        ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    return fig


def loss_figure(trace: LossTrace, title: Optional[str] = None) -> Figure:
    """Plot critic and generator losses over the recorded iterations."""
    fig = Figure(figsize=FIGSIZE, dpi=DPI)
    fig.subplots_adjust(left=0.1, right=0.97, bottom=0.12, top=0.92)
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(trace.iteration, trace.critic, label="critic")
    ax.plot(trace.iteration, trace.generator, label="generator")
    ax.set_xlabel("Iteration")
    ax.set_ylabel("Loss")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    return fig


def save_svg(fig: Figure, path: PathLike) -> None:
    with rc_context(SVG_RC):
        fig.savefig(path, format="svg", dpi=DPI, metadata={"Date": None})
    logger.debug("wrote %s", path)


def format_loss_trace_csv(trace: LossTrace) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(LOSS_COLUMNS)
    for iteration, critic, generator in zip(trace.iteration, trace.critic, trace.generator):
        writer.writerow([iteration, repr(float(critic)), repr(float(generator))])
    return buffer.getvalue()


def write_loss_trace_csv(trace: LossTrace, path: PathLike) -> None:
    """Write one row per recorded iteration."""
    Path(path).write_text(format_loss_trace_csv(trace), encoding="utf-8")


def summary(curves: Sequence[PowerCurve], target: float = 0.8) -> Dict[str, List[dict]]:
    """Recommendation and grid coverage of every curve."""
    entries = []
    for curve in curves:
        entries.append({
            "test": curve.label.test,
            "strategy": curve.label.strategy,
            "sources": list(curve.label.sources),
            "grid": [curve.ns[0], curve.ns[-1]] if curve.points else None,
            "points": len(curve.points),
            "skipped": list(curve.skipped),
            "errors_excluded": sum(p.errors_excluded for p in curve.points),
            "recommendation": recommend_sample_size(curve, target).to_dict() if curve.points else None,
        })
    return {"target": target, "curves": entries}
