"""Figure rendering for report commands; every plot lands next to its TSV."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import AUTHOR_RELATIONS, BEHAVIORS, ProvenanceTable
from .dappmatch import VolumeRow

DPI = 150


def _finish(fig, path: str | Path) -> Path:
    out = Path(path)
    fig.tight_layout()
    fig.savefig(out, dpi=DPI)
    plt.close(fig)
    return out


def plot_rank_size(
    rank_size: Sequence[tuple[int, int]],
    path: str | Path,
    title: str = "Duplicate group sizes by rank",
) -> Path:
    """Log-log rank/size curve of duplicate groups or cluster sizes."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ranks = [rank for rank, _ in rank_size]
    sizes = [size for _, size in rank_size]
    ax.loglog(ranks, sizes, marker=".", linestyle="-", color="tab:blue")
    ax.set_xlabel("rank")
    ax.set_ylabel("group size")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def plot_score_distribution(scores: Sequence[float], path: str | Path) -> Path:
    """Histogram of pair similarity scores over [0, 100]."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(scores, bins=20, range=(0, 100), color="tab:blue", edgecolor="black")
    ax.set_xlabel("similarity score")
    ax.set_ylabel("contract pairs")
    ax.set_title("Similarity score distribution")
    return _finish(fig, path)


def plot_concentration(
    series_by_name: Mapping[str, Sequence[tuple[int, float]]],
    path: str | Path,
) -> Path:
    """Cumulative share of contracts versus share of clusters, largest first."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, series in series_by_name.items():
        count = len(series)
        xs = [100.0 * rank / count for rank, _ in series]
        ys = [share for _, share in series]
        ax.plot(xs, ys, label=name)
    ax.set_xlabel("top clusters (%)")
    ax.set_ylabel("cumulative contracts (%)")
    ax.set_title("Contract concentration across clusters")
    ax.set_xlim(0, 100)
    ax.set_ylim(0, 105)
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _finish(fig, path)


def plot_volume_report(rows: Sequence[VolumeRow], path: str | Path, top_n: int = 10) -> Path:
    """Original versus plagiarized volume for the top clone clusters."""
    shown = list(rows[:top_n])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    positions = range(len(shown))
    width = 0.4
    ax.bar(
        [p - width / 2 for p in positions],
        [r.original_volume for r in shown],
        width=width,
        label="original",
        color="tab:blue",
    )
    ax.bar(
        [p + width / 2 for p in positions],
        [r.plagiarized_volume for r in shown],
        width=width,
        label="plagiarized",
        color="tab:red",
    )
    ax.set_xticks(list(positions))
    ax.set_xticklabels([r.original for r in shown], rotation=45, ha="right", fontsize=8)
    ax.set_yscale("log")
    ax.set_ylabel("volume (ETH)")
    ax.set_title("Clone cluster volumes")
    ax.legend()
    return _finish(fig, path)


def plot_provenance(table: ProvenanceTable, path: str | Path) -> Path:
    """Grouped bars of the authorship x vulnerability-behavior grid."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    positions = range(len(BEHAVIORS))
    width = 0.4
    offsets = (-width / 2, width / 2)
    colors = ("tab:blue", "tab:red")
    for relation, offset, color in zip(AUTHOR_RELATIONS, offsets, colors):
        ax.bar(
            [p + offset for p in positions],
            [table.cells[(relation, behavior)] for behavior in BEHAVIORS],
            width=width,
            label=relation.replace("_", " "),
            color=color,
        )
    ax.set_xticks(list(positions))
    ax.set_xticklabels([b.replace("_", "\n") for b in BEHAVIORS], fontsize=8)
    ax.set_ylabel("similar contract pairs")
    ax.set_title("Vulnerability behavior across similar pairs")
    ax.legend()
    return _finish(fig, path)
