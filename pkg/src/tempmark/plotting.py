"""Learning-curve figure."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "tempmark",
}
_MARKERS = ("o", "s", "^", "D", "v")


def plot_learning_curves(curves: Mapping[str, Sequence[tuple[int, float]]], path, title: str = "") -> Path:
    """Accuracy (percent) against training size, one line per model.

    The PNG carries no timestamp or software metadata so reruns are
    byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0), dpi=150)
        for i, (name, points) in enumerate(curves.items()):
            xs = [n for n, _ in points]
            ys = [100 * a for _, a in points]
            ax.plot(xs, ys, marker=_MARKERS[i % len(_MARKERS)], markersize=3, linewidth=1, label=name)
        ax.set_xlabel("training instances")
        ax.set_ylabel("accuracy (%)")
        if title:
            ax.set_title(title)
        ax.grid(True, linewidth=0.3, alpha=0.5)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="png", metadata={"Software": None})
        plt.close(fig)
    return path
