"""File-based figure rendering for reports and probes.

Everything draws through the Agg backend and writes to disk; nothing
ever opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def save_heatmap(grid, path, title: str = ""):
    """8x8 origin-square heatmap, files a-h left to right, rank 8 on top."""
    values = np.asarray(grid, dtype=float)
    display = values[::-1]  # rank 8 first
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    im = ax.imshow(display, cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(8), list("abcdefgh"))
    ax.set_yticks(range(8), [str(r) for r in range(8, 0, -1)])
    if title:
        ax.set_title(title, fontsize=10)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_series(series: dict, path, xlabel: str = "step", ylabel: str = "",
                title: str = ""):
    """Line plot of {label: [(x, y), ...]} series."""
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for label, points in series.items():
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, marker="o", markersize=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_histogram(counts: dict, path, title: str = "", max_bars: int = 24):
    """Bar chart of a move->count histogram, largest first."""
    items = list(counts.items())[:max_bars]
    labels = [k for k, _ in items]
    values = [v for _, v in items]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.4 * len(items) + 1.5), 3.4))
    ax.bar(range(len(items)), values, color="#4363a8")
    ax.set_xticks(range(len(items)), labels, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("count")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_topk_bars(entries: list, path, title: str = ""):
    """Per-k accuracy bars from a top-K report."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ks = [str(e["k"]) for e in entries]
    accs = [e["accuracy"] for e in entries]
    ax.bar(ks, accs, color="#4363a8")
    for i, e in enumerate(entries):
        ax.text(i, accs[i] + 0.01, f"{e['matched']}/{e['eligible']}",
                ha="center", fontsize=7)
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("k")
    ax.set_ylabel("accuracy")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_csv(path, header: list, rows: list):
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(str(h) for h in header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
