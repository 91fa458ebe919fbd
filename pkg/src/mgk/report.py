"""Delimited reports plus rendered figures for the CLI report path."""

from __future__ import annotations

import csv
import os
from typing import Iterable, Sequence

from .game import ThresholdFunction
from .space import FinMeasurableSpace


def write_csv(directory: str, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(list(row))
    return path


def write_membership_figure(directory: str, name: str, space: FinMeasurableSpace,
                            members: frozenset, title: str) -> str:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(directory, exist_ok=True)
    states = list(space.carrier)
    fig, ax = plt.subplots(figsize=(6, 0.5 + 0.4 * len(states)))
    ax.barh(range(len(states)), [1 if s in members else 0 for s in states], color="#4878a8")
    ax.set_yticks(range(len(states)))
    ax.set_yticklabels([str(s) for s in states])
    ax.set_xlim(0, 1.05)
    ax.set_xlabel("in validity set")
    ax.set_title(title)
    fig.tight_layout()
    path = os.path.join(directory, name)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_interval_figure(directory: str, name: str, tf: ThresholdFunction,
                          q=None, title: str = "") -> str:
    """Per-state threshold intervals as horizontal bars, with the queried
    threshold marked."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(directory, exist_ok=True)
    states = list(tf.space.carrier)
    fig, ax = plt.subplots(figsize=(6, 0.5 + 0.4 * len(states)))
    for i, s in enumerate(states):
        iv = tf.interval_at(s)
        if not iv.is_empty():
            ax.broken_barh([(float(iv.lo), float(iv.hi - iv.lo))], (i - 0.3, 0.6), color="#4878a8")
            for endpoint, closed in ((iv.lo, iv.lo_closed), (iv.hi, iv.hi_closed)):
                ax.plot([float(endpoint)], [i], marker="o",
                        markerfacecolor="#4878a8" if closed else "white",
                        markeredgecolor="#4878a8")
    if q is not None:
        ax.axvline(float(q), color="#a84848", linestyle="--", label=f"q = {q}")
        ax.legend(loc="lower right")
    ax.set_yticks(range(len(states)))
    ax.set_yticklabels([str(s) for s in states])
    ax.set_xlim(-0.02, 1.02)
    ax.set_xlabel("threshold")
    ax.set_title(title)
    fig.tight_layout()
    path = os.path.join(directory, name)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
