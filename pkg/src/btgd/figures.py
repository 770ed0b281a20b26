"""Matplotlib renderers for the CLI report path.

Each function writes one PNG next to the delimited output and returns the
path. Rendering is headless (Agg) and optional: the CSV/JSON artifacts are
the canonical, byte-reproducible outputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import Trajectory  # noqa: E402
from .minibatch import LRFinderReport  # noqa: E402

__all__ = [
    "save_trajectory_figure",
    "save_compare_figure",
    "save_lr_finder_figure",
    "save_saddle_figure",
    "save_sweep_figure",
]


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_trajectory_figure(traj: Trajectory, path: str | Path, title: str = "") -> Path:
    """Objective value, gradient norm, and step size against iteration index."""
    idx = [r.index for r in traj.records]
    values = [r.value for r in traj.records]
    grads = [r.grad_norm for r in traj.records]
    sigmas = [r.step_size for r in traj.records]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 8))
    axes[0].plot(idx, values, lw=1.2, color="tab:blue")
    axes[0].set_ylabel("f(z_n)")
    if min(values, default=0.0) > 0.0:
        axes[0].set_yscale("log")
    positive_g = [g for g in grads if g > 0.0]
    axes[1].plot(idx, grads, lw=1.2, color="tab:orange")
    axes[1].set_ylabel("||grad f||")
    if positive_g and len(positive_g) == len(grads):
        axes[1].set_yscale("log")
    axes[2].step(idx, sigmas, where="post", lw=1.2, color="tab:green")
    axes[2].set_ylabel("step size")
    axes[2].set_xlabel("iteration")
    if all(s > 0.0 for s in sigmas):
        axes[2].set_yscale("log", base=2)
    if title:
        axes[0].set_title(f"{title} [{traj.termination.value}]")
    return _finish(fig, Path(path))


def save_compare_figure(rows: Sequence[dict], path: str | Path) -> Path:
    """Function evaluations and final gradient norms, one bar per optimizer."""
    names = [r["optimizer"] for r in rows]
    evals = [r["func_evals"] for r in rows]
    grads = [max(r["final_grad_norm"], 1e-300) for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 0.6 * len(rows) + 2.2))
    y = np.arange(len(rows))
    ax1.barh(y, evals, color="tab:blue")
    ax1.set_yticks(y, names)
    ax1.invert_yaxis()
    ax1.set_xlabel("objective evaluations")
    ax2.barh(y, grads, color="tab:orange", log=True)
    ax2.set_yticks(y, ["" for _ in names])
    ax2.invert_yaxis()
    ax2.set_xlabel("final ||grad f||")
    return _finish(fig, Path(path))


def save_lr_finder_figure(report: LRFinderReport, path: str | Path) -> Path:
    """Per-batch step sizes with the mean and rescaled levels."""
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = np.arange(len(report.per_batch_sigmas))
    ax.plot(xs, report.per_batch_sigmas, "o", ms=5, color="tab:blue", label="per-batch sigma")
    ax.axhline(report.mean_sigma, color="tab:orange", lw=1.5, label=f"mean = {report.mean_sigma:.3g}")
    ax.axhline(
        report.rescaled_sigma, color="tab:green", lw=1.5, ls="--",
        label=f"rescaled ({report.mode.value}) = {report.rescaled_sigma:.3g}",
    )
    ax.set_xlabel("batch")
    ax.set_ylabel("accepted step size")
    if min(report.per_batch_sigmas) > 0.0:
        ax.set_yscale("log")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, Path(path))


def save_saddle_figure(
    starts: Sequence, escaped: Sequence[bool], saddle, eps: float, path: str | Path
) -> Path:
    """Escape outcomes over the sampled starting ball (first two coordinates)."""
    pts = np.array([np.asarray(p)[:2] for p in starts])
    esc = np.asarray(escaped, dtype=bool)
    ctr = np.asarray(saddle)[:2]
    fig, ax = plt.subplots(figsize=(5.5, 5))
    if np.any(esc):
        ax.plot(pts[esc, 0], pts[esc, 1], ".", ms=3, color="tab:green", label="escaped")
    if np.any(~esc):
        ax.plot(pts[~esc, 0], pts[~esc, 1], "x", ms=5, color="tab:red", label="trapped")
    ax.plot([ctr[0]], [ctr[1]], "*", ms=12, color="black", label="saddle")
    circle = plt.Circle(ctr, eps, fill=False, color="gray", lw=0.8)
    ax.add_patch(circle)
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, Path(path))


def save_sweep_figure(
    delta0_grid: Sequence[float],
    batch_sizes: Sequence[int],
    cells: Sequence[Sequence[float]],
    path: str | Path,
) -> Path:
    """Heatmap of rescaled mean step sizes: rows batch sizes, columns delta0."""
    data = np.array(cells, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(1.1 * len(delta0_grid) + 2.5, 0.7 * len(batch_sizes) + 1.8))
    shown = np.log10(np.maximum(data, 1e-300))
    im = ax.imshow(shown, aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(delta0_grid)), [f"{d:g}" for d in delta0_grid])
    ax.set_yticks(range(len(batch_sizes)), [str(k) for k in batch_sizes])
    ax.set_xlabel("starting delta0")
    ax.set_ylabel("batch size")
    for i in range(data.shape[0]):
        for j in range(data.shape[1]):
            ax.text(j, i, f"{data[i, j]:.3g}", ha="center", va="center", fontsize=7, color="white")
    fig.colorbar(im, ax=ax, label="log10 rescaled mean sigma")
    return _finish(fig, Path(path))
