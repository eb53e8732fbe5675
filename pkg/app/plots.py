from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .data_model import Sample  # noqa: E402
from .simulation import PowerResult  # noqa: E402

logger = logging.getLogger(__name__)

METHOD_STYLE = {
    "delgado": ("Delgado", "-"),
    "fanlin": ("Fan-Lin", "--"),
    "an": ("region (tau)", "-."),
    "anstar": ("region (gamma)", ":"),
}


def plot_fit(samples: Sequence[Sample], t: Sequence[float], values: Sequence[float], path: Path, title: str = "") -> Path:
    """Data points of every sample with the joint fit drawn as a step function."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for s in samples:
        ax.plot(s.t, s.y, ".", markersize=2.5, alpha=0.6, label=s.label or None)
    ax.step(t, values, where="pre", color="black", linewidth=1.0, label="joint fit")
    ax.set_xlabel("t")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_power(result: PowerResult, path: Path) -> Path:
    """One panel per scenario, one curve per method."""
    path.parent.mkdir(parents=True, exist_ok=True)
    g_ids = list(dict.fromkeys(r.g_id for r in result.rows))
    methods = list(dict.fromkeys(r.method for r in result.rows))
    cols = 2 if len(g_ids) > 1 else 1
    rows = (len(g_ids) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(5 * cols, 3.6 * rows), squeeze=False)
    for ax, g_id in zip(axes.flat, g_ids):
        for method in methods:
            curve = result.curve(g_id, method)
            label, style = METHOD_STYLE.get(method, (method, "-"))
            ax.plot([r.eta for r in curve], [r.power for r in curve], style, marker="o", markersize=3, label=label)
        ax.set_title(g_id)
        ax.set_xlabel("eta")
        ax.set_ylabel("power")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(alpha=0.3)
    for ax in list(axes.flat)[len(g_ids) :]:
        ax.axis("off")
    axes.flat[0].legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info("wrote %s", path)
    return path
