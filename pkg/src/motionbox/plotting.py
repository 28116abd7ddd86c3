"""Success and precision plots written straight to image files."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.5,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _legend_key(item):
    return item[1]


def plot_success(curves: Mapping[str, Mapping[str, np.ndarray]], path: str | os.PathLike) -> str:
    """Success rate against IOU threshold; legend entries carry the AUC."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.2))
        entries = []
        for label, c in curves.items():
            auc = float(np.mean(c["success"]))
            entries.append((label, -auc, c))
        for label, neg_auc, c in sorted(entries, key=_legend_key):
            ax.plot(c["success_thresholds"], c["success"], label=f"{label} [{-neg_auc:.3f}]")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("Overlap threshold")
        ax.set_ylabel("Success rate")
        ax.set_title("Success plot")
        ax.legend(loc="lower left")
        fig.savefig(path)
        plt.close(fig)
    return str(path)


def plot_precision(curves: Mapping[str, Mapping[str, np.ndarray]], path: str | os.PathLike,
                   at: float = 30.0) -> str:
    """Precision against centre-error threshold; legend entries carry the precision at ``at`` px."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.2))
        entries = []
        for label, c in curves.items():
            t = np.asarray(c["precision_thresholds"])
            p = float(np.asarray(c["precision"])[int(np.argmin(np.abs(t - at)))])
            entries.append((label, -p, c))
        for label, neg_p, c in sorted(entries, key=_legend_key):
            ax.plot(c["precision_thresholds"], c["precision"], label=f"{label} [{-neg_p:.3f}]")
        ax.set_xlim(0, float(np.max(next(iter(curves.values()))["precision_thresholds"])) if curves else 50)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("Location error threshold (px)")
        ax.set_ylabel("Precision")
        ax.set_title("Precision plot")
        ax.legend(loc="lower right")
        fig.savefig(path)
        plt.close(fig)
    return str(path)


def plot_curves(curves: Mapping[str, Mapping[str, np.ndarray]], out_dir: str | os.PathLike) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        plot_success(curves, out / "success.png"),
        plot_precision(curves, out / "precision.png"),
    ]
