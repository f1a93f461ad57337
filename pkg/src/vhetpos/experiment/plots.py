"""Report figures rendered to PNG next to the CSV outputs.

Figures are drawn on an Agg canvas without touching pyplot state, and
PNG metadata is stripped so that reruns produce identical bytes.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .runner import AXES, REGIONS, RunStatistics, ScenarioRun

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "vhetpos",
}
FIGSIZE = (5.0, 3.4)
DPI = 120

COMBO_COLORS = {
    "gps": "#444444",
    "gps-haps": "#1f77b4",
    "gps-gnb": "#2ca02c",
    "gps-haps-gnb": "#d62728",
}


def _new_figure(nrows: int = 1) -> Figure:
    fig = Figure(figsize=(FIGSIZE[0], FIGSIZE[1] * nrows), dpi=DPI)
    FigureCanvasAgg(fig)
    return fig


def _save(fig: Figure, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def cdf_figure(stats: RunStatistics, region: str, axis: str, path: Path) -> Path:
    fig = _new_figure()
    ax = fig.add_subplot()
    for label, cs in stats.combos.items():
        v = cs.samples[region][axis]
        if len(v) == 0:
            continue
        frac = [(i + 1) / len(v) for i in range(len(v))]
        ax.step(v, frac, where="post", label=label.replace("-", " + ").upper(),
                color=COMBO_COLORS.get(label))
    ax.set_xlabel(f"{axis} error (m)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1.0)
    ax.set_xlim(left=0)
    ax.set_title(f"{axis.capitalize()} accuracy, {region}")
    if ax.lines:
        ax.legend(loc="lower right")
    return _save(fig, path)


def dop_figure(run: ScenarioRun, path: Path, trial: int = 0) -> Path:
    fig = _new_figure(nrows=2)
    axes = fig.subplots(2, 1, sharex=True)
    for label, trials in run.records.items():
        recs = trials[trial]
        t = [r.epoch_s for r in recs]
        color = COMBO_COLORS.get(label)
        axes[0].plot(t, [r.hdop if r.fix else float("nan") for r in recs], label=label, color=color)
        axes[1].plot(t, [r.vdop if r.fix else float("nan") for r in recs], label=label, color=color)
    axes[0].set_ylabel("HDOP")
    axes[1].set_ylabel("VDOP")
    axes[1].set_xlabel("epoch (s)")
    for ax in axes:
        ax.axvline(run.cfg.region_boundary_epoch_s, color="k", ls=":", lw=0.8)
    axes[0].legend(loc="upper left", ncol=2)
    return _save(fig, path)


def availability_figure(run: ScenarioRun, path: Path, trial: int = 0) -> Path:
    fig = _new_figure()
    ax = fig.add_subplot()
    counts = run.world_counts[trial]
    for i, name in enumerate(("GPS", "HAPS", "gNB")):
        ax.step(run.geometry.epochs, counts[:, i], where="post", label=name)
    ax.axvline(run.cfg.region_boundary_epoch_s, color="k", ls=":", lw=0.8)
    ax.set_xlabel("epoch (s)")
    ax.set_ylabel("visible sources")
    ax.legend(loc="upper right")
    return _save(fig, path)


def render_report(run: ScenarioRun, stats: RunStatistics, out_dir: str | Path) -> list[Path]:
    """All report figures for a run, written under ``out_dir/figures``."""
    fig_dir = Path(out_dir) / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with matplotlib.rc_context(STYLE):
        for reg in (r.value for r in REGIONS):
            for axis in AXES:
                written.append(cdf_figure(stats, reg, axis, fig_dir / f"cdf_{reg}_{axis}.png"))
        if run.cfg.trials and len(run.geometry.epochs):
            written.append(dop_figure(run, fig_dir / "dop_trial0.png"))
            written.append(availability_figure(run, fig_dir / "availability_trial0.png"))
    return written
