"""Frame and box metrics. Plain numpy; inputs are arrays (or Tensors via ``.data``).

Frame metrics work on [0, 1] pixel values; box metrics on centre-format
(cx, cy, w, h) boxes in any consistent unit (pixels in reports).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03


def _arr(x) -> np.ndarray:
    return np.asarray(getattr(x, "data", x), dtype=float)


def mse(a, b) -> float:
    a, b = _arr(a), _arr(b)
    return float(np.mean((a - b) ** 2))


def mae(a, b) -> float:
    a, b = _arr(a), _arr(b)
    return float(np.mean(np.abs(a - b)))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x ** 2) / (2 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


def ssim(a, b, data_range: float = 1.0) -> float:
    """Mean SSIM over all full 11x11 Gaussian windows (σ=1.5) and channels.

    Images are [H, W] or [..., H, W]; leading axes are treated as channels.
    """
    a, b = _arr(a), _arr(b)
    if a.shape != b.shape:
        raise ValueError(f"ssim: shapes differ {a.shape} vs {b.shape}")
    if a.ndim < 2 or a.shape[-1] < SSIM_WINDOW or a.shape[-2] < SSIM_WINDOW:
        raise ValueError(f"ssim: image {a.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    win = gaussian_window()
    a = a.reshape((-1,) + a.shape[-2:])
    b = b.reshape((-1,) + b.shape[-2:])

    def filt(x):
        return np.tensordot(sliding_window_view(x, win.shape, axis=(1, 2)), win, axes=([3, 4], [0, 1]))

    c1, c2 = (SSIM_K1 * data_range) ** 2, (SSIM_K2 * data_range) ** 2
    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def psnr(a, b, peak: float = 1.0) -> float:
    """10·log10(peak²/MSE); identical inputs give +inf."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def roi_crop(box, height: int, width: int) -> tuple:
    """Integer (y0, y1, x0, x1) crop of a pixel centre-format box, clamped, at least 1x1."""
    cx, cy, bw, bh = (float(v) for v in box)
    x0 = min(max(int(round(cx - bw / 2)), 0), width - 1)
    y0 = min(max(int(round(cy - bh / 2)), 0), height - 1)
    x1 = min(max(int(round(cx + bw / 2)), x0 + 1), width)
    y1 = min(max(int(round(cy + bh / 2)), y0 + 1), height)
    return y0, y1, x0, x1


def roi_mse(pred, target, boxes) -> float:
    """MSE inside the ground-truth box crop of each frame, averaged over frames.

    pred/target: [T', C, H, W] (or [T', H, W]); boxes: [T', 4] pixels.
    """
    pred, target, boxes = _arr(pred), _arr(target), _arr(boxes)
    H, W = target.shape[-2:]
    vals = []
    for t in range(target.shape[0]):
        y0, y1, x0, x1 = roi_crop(boxes[t], H, W)
        d = pred[t, ..., y0:y1, x0:x1] - target[t, ..., y0:y1, x0:x1]
        vals.append(np.mean(d * d))
    return float(np.mean(vals))


def _corners(boxes: np.ndarray) -> np.ndarray:
    if np.any(boxes[..., 2:] < 0):
        raise ValueError("box with negative width or height")
    half = boxes[..., 2:] / 2
    return np.concatenate([boxes[..., :2] - half, boxes[..., :2] + half], axis=-1)


def iou(a, b) -> np.ndarray:
    """Elementwise IoU of centre-format boxes [..., 4]; zero when the union is empty."""
    ca, cb = _corners(_arr(a)), _corners(_arr(b))
    iw = np.clip(np.minimum(ca[..., 2], cb[..., 2]) - np.maximum(ca[..., 0], cb[..., 0]), 0, None)
    ih = np.clip(np.minimum(ca[..., 3], cb[..., 3]) - np.maximum(ca[..., 1], cb[..., 1]), 0, None)
    inter = iw * ih
    union = _arr(a)[..., 2] * _arr(a)[..., 3] + _arr(b)[..., 2] * _arr(b)[..., 3] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def miou(pred, target) -> float:
    return float(np.mean(iou(pred, target)))


def ade(pred, target) -> float:
    pred, target = _arr(pred), _arr(target)
    if pred.shape != target.shape:
        raise ValueError(f"ade: shapes differ {pred.shape} vs {target.shape}")
    return float(np.mean(np.linalg.norm(pred[..., :2] - target[..., :2], axis=-1)))


FRAME_METRICS = ("mse", "mae", "ssim", "psnr", "roi_mse")
BOX_METRICS = ("miou", "ade")
COLUMNS = FRAME_METRICS + BOX_METRICS


def sample_metrics(pred_frames, frames, pred_boxes, boxes) -> dict:
    """All metrics for one sample. Frames [T', C, H, W]; boxes [T', 4] in pixels.
    Missing predictions (ablated branches) yield NaN entries."""
    out = dict.fromkeys(COLUMNS, math.nan)
    if pred_frames is not None:
        pf, f = _arr(pred_frames), _arr(frames)
        out["mse"] = mse(pf, f)
        out["mae"] = mae(pf, f)
        out["ssim"] = float(np.mean([ssim(pf[t], f[t]) for t in range(f.shape[0])]))
        out["psnr"] = float(np.mean([psnr(pf[t], f[t]) for t in range(f.shape[0])]))
        out["roi_mse"] = roi_mse(pf, f, boxes)
    if pred_boxes is not None:
        out["miou"] = miou(pred_boxes, boxes)
        out["ade"] = ade(pred_boxes, boxes)
    return out


def per_step(pred_frames, frames, pred_boxes, boxes) -> dict:
    """Horizon-indexed breakdown: one value per future step for SSIM, MSE and IoU."""
    steps = {}
    if pred_frames is not None:
        pf, f = _arr(pred_frames), _arr(frames)
        steps["ssim"] = [ssim(pf[t], f[t]) for t in range(f.shape[0])]
        steps["mse"] = [mse(pf[t], f[t]) for t in range(f.shape[0])]
    if pred_boxes is not None:
        steps["iou"] = list(iou(pred_boxes, boxes))
    return steps


@dataclass
class MetricReport:
    rows: list = field(default_factory=list)  # dicts: seq_id, start + COLUMNS
    steps: list = field(default_factory=list)  # per-sample per_step dicts

    def add(self, seq_id: str, start: int, values: dict, steps: dict | None = None) -> None:
        self.rows.append({"seq_id": seq_id, "start": start, **values})
        self.steps.append(steps or {})

    def aggregate(self) -> dict:
        agg = {}
        for col in COLUMNS:
            vals = [r[col] for r in self.rows]
            agg[col] = float(np.mean(vals)) if vals else math.nan
        return agg

    def step_means(self) -> dict:
        out = {}
        for key in ("ssim", "mse", "iou"):
            series = [s[key] for s in self.steps if key in s]
            if series:
                out[key] = [float(v) for v in np.mean(np.asarray(series, dtype=float), axis=0)]
        return out
