"""SVG renderings of analysis tables."""

from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.core.exceptions import ArtifactIOError  # noqa: E402


def _save(fig: plt.Figure, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", bbox_inches="tight")
    except OSError as e:
        raise ArtifactIOError(f"Failed to write figure {path}: {e}") from e
    finally:
        plt.close(fig)
    return path


def diversity_curves(curves: Mapping[str, Sequence[tuple[int, float]]], path: Path) -> Path:
    """One line per run, labelled ``condition/run``."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label, points in sorted(curves.items()):
        if points:
            generations, values = zip(*points, strict=True)
            ax.plot(generations, values, label=label, linewidth=1)
    ax.set_xlabel("generation")
    ax.set_ylabel("population diversity (L1)")
    if curves:
        ax.legend(fontsize="small")
    return _save(fig, path)


def feature_map(points: Sequence[tuple[float, float, float]], path: Path, title: str) -> Path:
    """Scatter of (total length, total width) coloured by fitness."""
    fig, ax = plt.subplots(figsize=(6, 5))
    if points:
        data = np.array(points)
        scatter = ax.scatter(data[:, 0], data[:, 1], c=data[:, 2], s=2, cmap="viridis")
        fig.colorbar(scatter, ax=ax, label="fitness")
    ax.set_xlabel("total leg length")
    ax.set_ylabel("total leg width")
    ax.set_title(title)
    return _save(fig, path)


def qd_heatmap(
    grid: np.ndarray,
    length_range: tuple[float, float],
    width_range: tuple[float, float],
    path: Path,
    title: str,
) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(
        grid.T,
        origin="lower",
        extent=(*length_range, *width_range),
        aspect="auto",
        cmap="magma",
    )
    fig.colorbar(image, ax=ax, label="best fitness")
    ax.set_xlabel("total leg length")
    ax.set_ylabel("total leg width")
    ax.set_title(title)
    return _save(fig, path)


def score_boxplot(
    scores: Mapping[str, Mapping[str, Sequence[float]]], path: Path, ylabel: str = "fitness"
) -> Path:
    """Grouped box plots: one group per category, one box per condition."""
    categories = list(scores)
    conditions = sorted({c for per in scores.values() for c in per})
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(categories)), 4.5))
    width = 0.8 / max(len(conditions), 1)
    for k, condition in enumerate(conditions):
        positions = [i + (k - (len(conditions) - 1) / 2) * width for i in range(len(categories))]
        data = [list(scores[cat].get(condition, [])) or [np.nan] for cat in categories]
        box = ax.boxplot(data, positions=positions, widths=width * 0.9, patch_artist=True)
        for patch in box["boxes"]:
            patch.set_facecolor(f"C{k}")
        ax.plot([], [], color=f"C{k}", label=condition)
    ax.set_xticks(range(len(categories)), categories, rotation=20)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")
    return _save(fig, path)
