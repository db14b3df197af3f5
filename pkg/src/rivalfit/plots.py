"""Figure rendering for the CLI report paths.

Figures are rendered straight to files next to the delimited output; no
interactive backend is ever required.
"""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .solver import SweepRow

__all__ = ["save_sweep_figure", "save_example_figure"]


def _cell_grid(rows: Sequence[SweepRow], attr: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g1s = sorted({row.g1 for row in rows})
    g2s = sorted({row.g2 for row in rows})
    grid = np.full((len(g2s), len(g1s)), np.nan)
    for row in rows:
        if row.skip:
            continue
        value = getattr(row, attr)
        if math.isfinite(value):
            grid[g2s.index(row.g2), g1s.index(row.g1)] = value
    return np.asarray(g1s), np.asarray(g2s), grid


def save_sweep_figure(rows: Sequence[SweepRow], path: str) -> None:
    """Two-panel heatmap of the sweep: baseline reward and optimization gain."""
    fig, axes = plt.subplots(1, 2, figsize=(10.5, 4.2), constrained_layout=True)
    for ax, attr, title in (
        (axes[0], "u_theoretical", "reward of A, both players theoretical"),
        (axes[1], "gain", "guaranteed gain from optimizing A's coefficients"),
    ):
        g1s, g2s, grid = _cell_grid(rows, attr)
        mesh = ax.pcolormesh(g1s, g2s, np.ma.masked_invalid(grid), shading="nearest", cmap="viridis")
        ax.set_xlabel("g1 (A's knowledge fraction)")
        ax.set_ylabel("g2 (B's knowledge fraction)")
        ax.set_title(title, fontsize=10)
        fig.colorbar(mesh, ax=ax)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_example_figure(
    alphas: Sequence[float],
    betas: Sequence[float],
    rewards: np.ndarray,
    path: str,
) -> None:
    """Discrete example: reward heatmap over (alpha, beta) plus the beta=1 cut."""
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    rewards = np.asarray(rewards, dtype=float)
    fig, (ax_map, ax_cut) = plt.subplots(1, 2, figsize=(10.5, 4.2), constrained_layout=True)
    mesh = ax_map.pcolormesh(alphas, betas, rewards.T, shading="nearest", cmap="viridis")
    ax_map.set_xlabel("alpha (A's common coefficient)")
    ax_map.set_ylabel("beta (B's common coefficient)")
    ax_map.set_title("expected reward of A", fontsize=10)
    fig.colorbar(mesh, ax=ax_map)

    j = int(np.argmin(np.abs(betas - 1.0)))
    ax_cut.plot(alphas, rewards[:, j], lw=1.5)
    ax_cut.set_xlabel("alpha (A's common coefficient)")
    ax_cut.set_ylabel("expected reward of A")
    ax_cut.set_title(f"opponent fixed at beta = {betas[j]:g}", fontsize=10)
    ax_cut.grid(alpha=0.3)
    fig.savefig(path, dpi=150)
    plt.close(fig)
