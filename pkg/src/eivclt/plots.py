"""Static SVG figures for Monte Carlo reports."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .studentize import chi2_quantile  # noqa: E402
from .verify import McReport  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "eivclt"

_SVG_META = {"Date": None}


def histogram_svg(report: McReport, path, bins: int = 50) -> None:
    """Histogram of every component of every mode, N(0, 1) density overlaid."""
    modes = sorted(report.modes)
    d = report.modes[modes[0]].vectors.shape[1]
    fig, axes = plt.subplots(len(modes), d, figsize=(3.2 * d, 2.6 * len(modes)), squeeze=False)
    grid = np.linspace(-4.0, 4.0, 401)
    density = np.exp(-grid**2 / 2.0) / math.sqrt(2.0 * math.pi)
    for row, mode in enumerate(modes):
        vectors = report.modes[mode].vectors
        for k in range(d):
            ax = axes[row][k]
            ax.hist(vectors[:, k], bins=bins, range=(-4.0, 4.0), density=True, color="0.75")
            ax.plot(grid, density, color="C0", lw=1.2)
            ax.set_title(f"mode {mode}: T{k + 1}", fontsize=9)
            ax.tick_params(labelsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def qq_svg(report: McReport, path, points: int = 199) -> None:
    """Quantiles of ||T||^2 against chi-square(d) quantiles."""
    modes = sorted(report.modes)
    d = report.modes[modes[0]].vectors.shape[1]
    probs = (np.arange(1, points + 1) - 0.5) / points
    theo = np.array([chi2_quantile(d, p) for p in probs])
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    for i, mode in enumerate(modes):
        emp = np.quantile(report.modes[mode].norm2, probs)
        ax.plot(theo, emp, ".", ms=3, color=f"C{i}", label=f"mode {mode}")
    top = float(theo[-1]) * 1.1
    ax.plot([0, top], [0, top], color="0.4", lw=0.8)
    ax.set_xlabel(f"chi-square({d}) quantile")
    ax.set_ylabel("empirical quantile of ||T||^2")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
