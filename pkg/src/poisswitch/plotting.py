"""Static figures written next to the CSV/JSON outputs.

Output is deterministic SVG: no date metadata and a fixed hash salt.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .odesolver import ValueSolution  # noqa: E402
from .regions import RegionReport  # noqa: E402

golden_mean = (math.sqrt(5) - 1.0) / 2.0
fig_width = 6.0

params = {
    "axes.labelsize": 10,
    "font.size": 9,
    "font.family": "serif",
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "figure.figsize": (fig_width, fig_width * golden_mean),
    "svg.hashsalt": "poisswitch",
    "svg.fonttype": "path",
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format=path.suffix.lstrip(".") or "svg", metadata={"Date": None}
                if path.suffix == ".svg" else None, bbox_inches="tight")
    plt.close(fig)
    return path


def _shade(ax, x, mask, color, label):
    if not mask.any():
        return
    ax.fill_between(x, 0, 1, where=mask, transform=ax.get_xaxis_transform(),
                    color=color, alpha=0.15, step="mid", label=label, linewidth=0)


def plot_regions(solution: ValueSolution, report: RegionReport, path, title: str = "") -> Path:
    """G1, G2 on a log axis with the switching regions shaded."""
    x = solution.grid.nodes
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        ax.axhline(0.0, color="0.5", lw=0.6)
        ax.plot(x, report.G1, color="C0", label=r"$G_1 = v^1 - v^2 + g^{12}$")
        ax.plot(x, report.G2, color="C3", label=r"$G_2 = v^2 - v^1 + g^{21}$")
        _shade(ax, x, report.G1 <= 0, "C0", r"$S^1$")
        _shade(ax, x, report.G2 <= 0, "C3", r"$S^2$")
        for thr, c in ((report.x_lower1, "C0"), (report.x_upper2, "C3")):
            if 0 < thr < math.inf:
                ax.axvline(thr, color=c, ls="--", lw=0.8)
        ax.set_xscale("log")
        ax.set_xlabel("x")
        ax.set_ylabel("G")
        ax.set_title(title or f"case {report.case_predicted} predicted, {report.case_observed} observed")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_values(solution: ValueSolution, path, title: str = "") -> Path:
    x = solution.grid.nodes
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        ax.plot(x, solution.v1, label=r"$v^1$")
        ax.plot(x, solution.v2, label=r"$v^2$")
        ax.set_xscale("log")
        ax.set_xlabel("x")
        ax.set_ylabel("value")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        return _save(fig, path)


def plot_sweep(param: str, values: Sequence[float], lower1: Sequence[float],
               upper2: Sequence[float], cases: Sequence, path, x_range=None) -> Path:
    """Thresholds against a swept parameter. Infinite thresholds are drawn at
    the top of the state range, zero ones at the bottom."""
    values = np.asarray(values, dtype=float)
    lo, hi = x_range if x_range else (None, None)

    def clip(a):
        a = np.asarray(a, dtype=float)
        out = a.copy()
        if hi is not None:
            out[np.isinf(a)] = hi
        if lo is not None:
            out[a <= 0] = lo
        return out

    with plt.rc_context(params):
        fig, ax = plt.subplots()
        ax.plot(values, clip(lower1), "o-", color="C0", label=r"lower threshold, $\inf S^1$")
        ax.plot(values, clip(upper2), "s-", color="C3", label=r"upper threshold, $\sup S^2$")
        for v, c in zip(values, cases):
            ax.annotate(str(c), (v, 1.0), xycoords=("data", "axes fraction"),
                        ha="center", va="bottom", fontsize=7)
        ax.set_yscale("log")
        ax.set_xlabel(param)
        ax.set_ylabel("threshold")
        ax.legend(loc="best")
        return _save(fig, path)
