"""Optional SVG renderings of the CSV tables.  Plots only ever draw rows
that were already written to CSV."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "parley"
    return plt


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path


def activity_bars(rows, path, title: str = "Words per issue") -> Path:
    """Grouped bars from (label, period, words) rows."""
    plt = _pyplot()
    labels = list(dict.fromkeys(str(r[0]) for r in rows))
    periods = sorted({r[1] for r in rows})
    value = {(str(r[0]), r[1]): r[2] for r in rows}
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(labels) + 2), 4))
    width = 0.8 / max(1, len(periods))
    x = np.arange(len(labels))
    for i, period in enumerate(periods):
        ax.bar(x + i * width, [value.get((lab, period), 0) for lab in labels], width, label=period)
    ax.set_xticks(x + 0.4 - width / 2, labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("words")
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, Path(path))


def profile_lines(rows, path, title: str) -> Path:
    """One line per party: similarity to the reference across issues."""
    plt = _pyplot()
    issues = list(dict.fromkeys(r["issue"] for r in rows))
    series = defaultdict(dict)
    for r in rows:
        if r["similarity"] != "":
            series[r["party"]][r["issue"]] = float(r["similarity"])
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(issues) + 2), 4))
    for party in sorted(series):
        ys = [series[party].get(i, np.nan) for i in issues]
        ax.plot(range(len(issues)), ys, marker="o", label=party)
    ax.set_xticks(range(len(issues)), issues, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("cosine similarity to reference")
    ax.set_title(title)
    ax.legend(fontsize=7)
    return _save(fig, Path(path))


def heatmap_grid(report, path) -> Path:
    plt = _pyplot()
    from matplotlib.colors import ListedColormap

    cmap = ListedColormap(["#ffffff", "#b7e4a7", "#ffe680", "#ffa64d", "#e0301e"])
    fig, ax = plt.subplots(figsize=(1.2 * len(report.parties) + 2, 1.2 * len(report.parties) + 1))
    ax.imshow(report.levels, cmap=cmap, vmin=0, vmax=4)
    n = len(report.parties)
    for i in range(n):
        for j in range(n):
            v = report.matrix[i, j]
            ax.text(j, i, "" if np.isnan(v) else f"{v:.3f}", ha="center", va="center", fontsize=7)
    ax.set_xticks(range(n), report.parties, rotation=45, ha="right")
    ax.set_yticks(range(n), report.parties)
    ax.set_title(report.issue)
    return _save(fig, Path(path))


def bar_chart(labels, values, path, title: str, ylabel: str) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(labels) + 2), 4))
    ax.bar(range(len(labels)), values)
    if len(labels) <= 40:
        ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return _save(fig, Path(path))


def series_plot(x, ys: dict, path, title: str, ylabel: str) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, y in ys.items():
        ax.plot(x, y, label=label, linewidth=0.8)
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(ys) > 1:
        ax.legend(fontsize=7)
    return _save(fig, Path(path))
