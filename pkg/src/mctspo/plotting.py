"""Render learning-curve figures next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def resample_step(curve: list[tuple[int, float]], grid: np.ndarray) -> np.ndarray:
    """Forward-fill a best-so-far curve onto a common env-call grid."""
    if not curve:
        return np.full(len(grid), np.nan)
    xs = np.asarray([p[0] for p in curve], dtype=float)
    ys = np.asarray([p[1] for p in curve], dtype=float)
    idx = np.searchsorted(xs, grid, side="right") - 1
    out = ys[np.clip(idx, 0, len(ys) - 1)]
    out[idx < 0] = ys[0]  # before the first sample, show the first value
    return out


def _grid(budget: int) -> np.ndarray:
    return np.linspace(budget / 100.0, budget, 100)


def _band(curves: list[list[tuple[int, float]]], grid: np.ndarray):
    stack = np.vstack([resample_step(c, grid) for c in curves])
    mean = stack.mean(axis=0)
    if stack.shape[0] > 1:
        err = stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])
    else:
        err = np.zeros_like(mean)
    return mean, err


def render_curves(curves: list[tuple[int, list[tuple[int, float]]]], budget: int,
                  path: str | Path, title: str = "") -> None:
    """Per-trial best-so-far curves plus their mean and standard-error band."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for seed, curve in curves:
        if not curve:
            continue
        xs, ys = zip(*curve)
        ax.step(xs, ys, where="post", alpha=0.35, lw=0.9, label=f"seed {seed}")
    nonempty = [c for _, c in curves if c]
    if nonempty:
        grid = _grid(budget)
        mean, err = _band(nonempty, grid)
        ax.plot(grid, mean, color="black", lw=1.8, label="mean")
        ax.fill_between(grid, mean - err, mean + err, color="black", alpha=0.15)
    ax.set_xlabel("environment calls")
    ax.set_ylabel("best return")
    ax.set_title(title)
    if len(curves) <= 12:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_comparison(curves_by_label: dict[str, list[list[tuple[int, float]]]],
                      budget: int, path: str | Path, title: str = "") -> None:
    """Mean curve with standard-error band per algorithm, shared axes."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    grid = _grid(budget)
    for label, curves in curves_by_label.items():
        curves = [c for c in curves if c]
        if not curves:
            continue
        mean, err = _band(curves, grid)
        line, = ax.plot(grid, mean, lw=1.8, label=label)
        ax.fill_between(grid, mean - err, mean + err,
                        color=line.get_color(), alpha=0.2)
    ax.set_xlabel("environment calls")
    ax.set_ylabel("best return")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
