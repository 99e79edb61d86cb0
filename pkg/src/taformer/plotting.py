"""Matplotlib figures written next to run outputs (non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def loss_curve(trace, path) -> None:
    """Trace rows (step, l_video, l_motion, l_gaussian, total, lr) -> log-scale loss plot."""
    rows = np.asarray(trace, dtype=float)
    fig, (ax, ax_lr) = plt.subplots(2, 1, figsize=(7, 6), sharex=True, height_ratios=(3, 1))
    for col, label in ((4, "total"), (1, "video"), (2, "motion"), (3, "gaussian")):
        vals = rows[:, col]
        if np.all(np.isnan(vals)):
            continue
        ax.plot(rows[:, 0], vals, label=label, lw=1.2 if col == 4 else 0.8)
    ax.set_yscale("log")
    ax.set_ylabel("loss")
    ax.legend()
    ax_lr.plot(rows[:, 0], rows[:, 5], color="k", lw=0.8)
    ax_lr.set_ylabel("lr")
    ax_lr.set_xlabel("step")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def horizon_metrics(step_means: dict, path) -> None:
    """Per-horizon mean SSIM / MSE / IoU."""
    keys = [k for k in ("ssim", "mse", "iou") if k in step_means]
    if not keys:
        return
    fig, axes = plt.subplots(1, len(keys), figsize=(3.5 * len(keys), 3), squeeze=False)
    for ax, key in zip(axes[0], keys):
        vals = step_means[key]
        ax.plot(np.arange(1, len(vals) + 1), vals, marker="o")
        ax.set_xlabel("future step")
        ax.set_title(key.upper())
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def trajectory(observed, truth, predicted, path, size=None) -> None:
    """Centre trajectories: observed boxes, ground-truth future and predicted future (pixels)."""
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot(observed[:, 0], observed[:, 1], "o-", color="0.4", label="observed")
    if truth is not None:
        ax.plot(truth[:, 0], truth[:, 1], "o-", color="tab:green", label="ground truth")
    if predicted is not None:
        ax.plot(predicted[:, 0], predicted[:, 1], "x--", color="tab:red", label="predicted")
    if size is not None:
        ax.set_xlim(0, size[1])
        ax.set_ylim(size[0], 0)
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
