"""Figure rendering for the report path (PNG files next to the CSVs).

Import stays lazy at the CLI level so batch runs that only want delimited
output never touch matplotlib.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .spectral import SpectralProfile
from .sweep import SweepResult

_DPI = 150

_PATTERN_COLORS = {
    "C": "tab:blue",
    "M": "tab:green",
    "T": "tab:orange",
}


def _pattern_color(pattern: str) -> str:
    # homogeneous patterns get their family color, mixes stay gray
    letters = set(pattern)
    if len(letters) == 1:
        return _PATTERN_COLORS[pattern[0]]
    return "tab:gray"


def fig_gain_vs_correlation(sweep: SweepResult, path) -> None:
    """Scatter of accuracy gain against the triple partial correlation."""
    xs, ys, colors = [], [], []
    for rec in sweep.records:
        if rec.partial_correlation is None:
            continue
        xs.append(rec.partial_correlation)
        ys.append(rec.acc_gain * 100.0)
        colors.append(_pattern_color(rec.pattern))
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.scatter(xs, ys, s=18, c=colors, alpha=0.7, edgecolors="none")
    ax.axhline(0.0, color="black", linewidth=0.6)
    ax.set_xlabel("partial correlation (mean adjusted)")
    ax.set_ylabel("accuracy gain (%)")
    ax.set_title("Ensemble gain vs member error correlation")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def fig_gain_vs_latency(sweep: SweepResult, frontier, path) -> None:
    """Gain against aggregate latency with the Pareto frontier overlaid."""
    xs = [r.latency_s for r in sweep.records if r.latency_s is not None]
    ys = [r.acc_gain * 100.0 for r in sweep.records if r.latency_s is not None]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.scatter(xs, ys, s=14, color="tab:blue", alpha=0.45, edgecolors="none",
               label="ensembles")
    fx = [r.latency_s for r in frontier]
    fy = [r.acc_gain * 100.0 for r in frontier]
    ax.plot(fx, fy, color="tab:red", marker="o", markersize=4,
            linewidth=1.2, label="Pareto frontier")
    ax.set_xlabel("aggregate latency (s)")
    ax.set_ylabel("accuracy gain (%)")
    ax.set_title("Ensemble gain vs inference time")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def fig_profiles(profiles: dict[str, SpectralProfile], path) -> None:
    """Relative log-amplitude curves, one line per model."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for model_id in sorted(profiles):
        prof = profiles[model_id]
        ax.plot(prof.bin_centers, prof.values, marker=".", markersize=4,
                linewidth=1.0, label=model_id)
    ax.set_xlabel("normalized frequency")
    ax.set_ylabel("relative log amplitude")
    ax.set_title("Radial spectrum profiles")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
