"""Figures written next to CLI reports (Agg backend, files only)."""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
}


def image_grid(path, panels: Sequence[tuple[str, np.ndarray]], ncols: int = 5) -> None:
    """Binary images side by side, black = 1."""
    n = len(panels)
    ncols = min(ncols, n)
    nrows = math.ceil(n / ncols)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=(2.0 * ncols, 2.1 * nrows), squeeze=False)
        for ax in axes.ravel():
            ax.axis("off")
        for ax, (title, img) in zip(axes.ravel(), panels):
            ax.imshow(np.asarray(img), cmap="gray_r", vmin=0, vmax=1, interpolation="nearest")
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def channel_estimates(path, b_hat: Sequence[float], b_true: Sequence[float] | None = None) -> None:
    """Bar chart of estimated BSC parameters, with the truth as markers when known."""
    k = np.arange(1, len(b_hat) + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(3.0, 0.45 * len(k) + 1.5), 2.6))
        ax.bar(k, b_hat, color="0.6", label="estimate")
        if b_true is not None:
            ax.plot(k, b_true, "k_", markersize=14, mew=2, label="truth")
        ax.axhline(0.5, color="k", lw=0.6, ls=":")
        ax.set_xticks(k)
        ax.set_ylim(0, 1)
        ax.set_xlabel("copy")
        ax.set_ylabel("b(0|0)")
        ax.legend(loc="lower center", bbox_to_anchor=(0.5, 1.0), ncol=2, frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
