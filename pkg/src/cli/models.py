"""Data models for the command-line interface."""

from dataclasses import dataclass, field
from typing import Any, Dict, List

from power import PowerCurve, recommend_sample_size

from .config import TOOL_NAME, RunConfig

MANIFEST_NAME = "manifest.json"


def decisions(config: RunConfig) -> Dict[str, Any]:
    """Interpretations every run records next to its results."""
    return {
        "sample_size": "n rows per group",
        "normalization": "per-volume min-max to [0, 1]",
        "bootstrap": "with replacement" if config.bootstrap_with_replacement else "subsample without replacement",
        "smoothing": f"centered moving average, window {config.smooth_window}",
        "confidence_band": "Wilson 95% score interval",
        "absent_condition": "all-zero condition vector",
        "pca_fit": "real data only",
    }


@dataclass
class RunRecord:
    """Everything a run reports in its manifest.

    Attributes:
        config: The merged run configuration.
        version: Tool version.
        seeds: Named seeds derived for the run.
        curves: One entry per written curve table.
        artifacts: Other written files, relative to the output directory.
        notes: Scenario-specific facts (conservativeness, NaN counts, ...).
    """
    config: RunConfig
    version: str
    seeds: Dict[str, int] = field(default_factory=dict)
    curves: List[Dict[str, Any]] = field(default_factory=list)
    artifacts: List[str] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)

    def add_curve(self, curve: PowerCurve, relpath: str) -> None:
        self.curves.append({
            "file": relpath,
            "test": curve.label.test,
            "strategy": curve.label.strategy,
            "sources": list(curve.label.sources),
            "fingerprint": curve.fingerprint,
            "recommendation": recommend_sample_size(curve, self.config.target).to_dict(),
            "skipped": list(curve.skipped),
            "errors_excluded": sum(p.errors_excluded for p in curve.points),
        })

    def to_manifest(self) -> Dict[str, Any]:
        return {
            "tool": TOOL_NAME,
            "version": self.version,
            "scenario": self.config.scenario,
            "config": self.config.to_dict(),
            "seeds": dict(self.seeds),
            "decisions": decisions(self.config),
            "curves": list(self.curves),
            "artifacts": sorted(self.artifacts),
            "notes": dict(self.notes),
        }
