"""Figure rendering for training metrics CSVs.

Reads the CSV emitted by the harness and draws the standard view: training
loss (solid, left axis) and validation accuracy (dashed, right axis)
against V-cycles or work units, one color per run.  Figures are written to
files next to the CSVs; nothing is shown interactively.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import CSV_HEADER


def load_metrics(path):
    """Columns of one metrics CSV as a dict of float arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.dtype.names != CSV_HEADER:
        raise ValueError(
            f"{path}: expected columns {','.join(CSV_HEADER)}, "
            f"got {','.join(data.dtype.names or ())}"
        )
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name], dtype=float) for name in CSV_HEADER}


def default_figure_path(csv_paths):
    if len(csv_paths) == 1:
        return os.path.splitext(csv_paths[0])[0] + ".png"
    return os.path.join(os.path.dirname(csv_paths[0]) or ".", "training_curves.png")


def render_training_figure(csv_paths, out_path=None, labels=None,
                           x_axis="v_cycle", title=None, log_x=True):
    """Render one comparison figure from one or more metrics CSVs.

    ``x_axis`` is either ``"v_cycle"`` or ``"work_units"``.  Returns the
    path written.
    """
    if x_axis not in ("v_cycle", "work_units"):
        raise ValueError(f"x_axis must be 'v_cycle' or 'work_units', got {x_axis!r}")
    if labels is not None and len(labels) != len(csv_paths):
        raise ValueError("one label per CSV required")
    if labels is None:
        labels = [os.path.splitext(os.path.basename(p))[0] for p in csv_paths]
    out_path = out_path or default_figure_path(csv_paths)

    fig, ax_loss = plt.subplots(figsize=(6.4, 4.2))
    ax_acc = ax_loss.twinx()
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, (path, label) in enumerate(zip(csv_paths, labels)):
        cols = load_metrics(path)
        x = cols[x_axis]
        if log_x:
            keep = x > 0  # cycle 0 is the pre-training evaluation
            x = x[keep]
            series = {k: v[keep] for k, v in cols.items()}
        else:
            series = cols
        color = colors[i % len(colors)]
        ax_loss.plot(x, series["train_loss"], color=color, lw=1.8, label=label)
        ax_acc.plot(x, series["validation_accuracy"], color=color, lw=1.8, ls="--")
    if log_x:
        ax_loss.set_xscale("log")
    ax_loss.set_xlabel("V-cycles" if x_axis == "v_cycle" else "work units")
    ax_loss.set_ylabel("training loss")
    ax_acc.set_ylabel("validation accuracy")
    ax_acc.set_ylim(top=1.05)
    ax_loss.legend(loc="center right", fontsize=8, frameon=False)
    if title:
        ax_loss.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
