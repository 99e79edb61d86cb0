"""Training losses: frame MSE, Smooth-L1 on boxes, target-sensitive Gaussian loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, ops


def _same_shape(a: Tensor, b: Tensor, name: str):
    if a.shape != b.shape:
        raise ops.DimensionError(f"{name}: prediction {a.shape} vs target {b.shape}")


def video_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error, averaged per pixel and over frames."""
    _same_shape(pred, target, "video_loss")
    return ops.mean(ops.square(pred - target))


def motion_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Smooth-L1 with threshold 1: 0.5·d² for |d| < 1, |d| − 0.5 otherwise; mean over steps and coordinates."""
    _same_shape(pred, target, "motion_loss")
    d = pred - target
    small = np.abs(d.data) < 1.0
    return ops.mean(ops.where(small, 0.5 * ops.square(d), ops.abs(d) - 0.5))


def gaussian_weight_field(box, height: int, width: int, sigma_x: float = 50.0, sigma_y: float = 50.0) -> np.ndarray:
    """[H, W] weights: 1 strictly inside the box, exp(-½(dx²/σx² + dy²/σy²)) elsewhere.

    ``box`` is (cx, cy, w, h) in pixels; weights are evaluated at integer pixel coordinates.
    """
    cx, cy, bw, bh = (float(v) for v in box)
    dx = np.arange(width, dtype=float) - cx
    dy = np.arange(height, dtype=float) - cy
    field = np.exp(-0.5 * (dy[:, None] ** 2 / sigma_y ** 2 + dx[None, :] ** 2 / sigma_x ** 2))
    inside = (np.abs(dy)[:, None] < bh / 2) & (np.abs(dx)[None, :] < bw / 2)
    field[inside] = 1.0
    return field


def weight_fields(boxes_px: np.ndarray, height: int, width: int, sigma_x: float, sigma_y: float) -> np.ndarray:
    """[..., 4] pixel boxes -> [..., 1, H, W] fields (singleton channel axis for broadcasting)."""
    boxes_px = np.asarray(boxes_px, dtype=float)
    flat = boxes_px.reshape(-1, 4)
    fields = np.stack([gaussian_weight_field(b, height, width, sigma_x, sigma_y) for b in flat])
    return fields.reshape(boxes_px.shape[:-1] + (1, height, width))


def tsgl(pred_frames: Tensor, frames: Tensor, pred_boxes_px, boxes_px,
         sigma_x: float = 50.0, sigma_y: float = 50.0) -> Tensor:
    """Target-sensitive Gaussian loss.

    Frames are [..., T', C, H, W]; boxes [..., T', 4] in pixels. The weight
    fields are constants: no gradient reaches the predicted boxes through them.
    """
    _same_shape(pred_frames, frames, "tsgl")
    H, W = frames.shape[-2:]
    pb = pred_boxes_px.data if isinstance(pred_boxes_px, Tensor) else pred_boxes_px
    gb = boxes_px.data if isinstance(boxes_px, Tensor) else boxes_px
    wp = Tensor(weight_fields(pb, H, W, sigma_x, sigma_y), dtype=frames.dtype)
    wg = Tensor(weight_fields(gb, H, W, sigma_x, sigma_y), dtype=frames.dtype)
    return ops.mean(ops.square(wp * pred_frames - wg * frames))


@dataclass
class LossParts:
    video: Tensor | None
    motion: Tensor | None
    gaussian: Tensor | None

    def values(self) -> tuple:
        return tuple(float("nan") if p is None else p.item() for p in (self.video, self.motion, self.gaussian))


def total_loss(parts: LossParts, lambda1: float, lambda2: float) -> Tensor:
    """L = L_video + λ1·L_motion + λ2·L_Gaussian; absent parts contribute nothing."""
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("loss weights must be non-negative")
    terms = []
    if parts.video is not None:
        terms.append(parts.video)
    if parts.motion is not None:
        terms.append(parts.motion * lambda1)
    if parts.gaussian is not None:
        terms.append(parts.gaussian * lambda2)
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total
