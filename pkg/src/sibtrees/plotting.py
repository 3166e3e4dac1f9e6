"""Figures for ``report --figures``: difference-forest counts by depth."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_counts_csv(path: Path, rows: Sequence[Tuple[int, int]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "components"])
        w.writerows(rows)


def plot_counts(path: Path, rows: Sequence[Tuple[int, int]], title: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    depths = [d for d, _ in rows]
    counts = [c for _, c in rows]
    ax.plot(depths, counts, marker="o", linewidth=1.2, markersize=3)
    ax.set_xlabel("truncation depth")
    ax.set_ylabel("components of T minus f(T)")
    ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_figures(directory: Path, stem: str, rows: Sequence[Tuple[int, int]], title: str) -> List[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{stem}_difference_forest.csv"
    png_path = directory / f"{stem}_difference_forest.png"
    write_counts_csv(csv_path, rows)
    plot_counts(png_path, rows, title)
    return [csv_path, png_path]
