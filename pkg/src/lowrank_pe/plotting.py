"""Figures for sweep and regret-curve reports."""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import RegretSummary  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "lines.linewidth": 1.5,
    "lines.markersize": 5,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "lowrank-pe",
    "svg.fonttype": "none",
}


@contextmanager
def report_style():
    with plt.rc_context(STYLE):
        yield


def _save(fig, path: Path) -> None:
    path = Path(path)
    meta = {"Date": None} if path.suffix == ".svg" else None
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)


def plot_sweep(summaries: Sequence[RegretSummary], path: str | Path,
               slopes: dict | None = None) -> None:
    """Mean simple regret against n on log-log axes, one series per (strategy, d, N)."""
    groups: dict[tuple[str, int, int], list[RegretSummary]] = {}
    for s in summaries:
        groups.setdefault((s.strategy, s.d, s.N), []).append(s)
    with report_style():
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        for key, group in groups.items():
            group = sorted(group, key=lambda s: s.n)
            pts = [s for s in group if s.mean > 0]
            label = f"{key[0]} (d={key[1]}, N={key[2]})"
            if slopes and slopes.get(key) is not None:
                label += f", slope {slopes[key]:.2f}"
            if not pts:
                continue
            ax.errorbar([s.n for s in pts], [s.mean for s in pts],
                        yerr=[s.stderr for s in pts], marker="o", capsize=2, label=label)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("stopping time n")
        ax.set_ylabel("mean simple regret")
        if ax.lines:
            ax.legend(loc="best")
        else:
            ax.text(0.5, 0.5, "all mean regrets are zero", ha="center", va="center",
                    transform=ax.transAxes)
        _save(fig, Path(path))


def plot_curves(curves: dict[str, dict], path: str | Path) -> None:
    """Per-round simple regret curves keyed by strategy."""
    with report_style():
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        for name, c in curves.items():
            ax.plot(c["t"], c["mean"], label=name)
            ax.fill_between(c["t"], c["mean"] - c["stderr"], c["mean"] + c["stderr"], alpha=0.2)
        ax.set_xlabel("round t")
        ax.set_ylabel("mean simple regret")
        ax.legend(loc="best")
        _save(fig, Path(path))
