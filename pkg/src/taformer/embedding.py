"""Frame and box embeddings.

Frames go through four conv layers (strides 2,1,2,1; each followed by group
norm and GELU) to features at 1/4 resolution. Boxes, normalised to [0, 1] by
the frame size, go through one linear layer plus a fixed sinusoidal
positional encoding over time.
"""

from __future__ import annotations

import numpy as np

from .config import ConfigError
from .tensor import Tensor, ops
from .tensor.nn import Conv2d, GroupNorm, Linear, Module

STRIDES = (2, 1, 2, 1)


class SpatialEmbedding(Module):
    def __init__(self, channels: int, c_hid: int, rng):
        self.convs = []
        self.norms = []
        c = channels
        for s in STRIDES:
            self.convs.append(Conv2d(c, c_hid, 3, rng, stride=s, padding=1))
            self.norms.append(GroupNorm(c_hid, min(8, c_hid)))
            c = c_hid
        self.c_hid = c_hid

    def forward(self, frames: Tensor) -> Tensor:
        """[B, T, C, H, W] -> Z [B, T, C_hid, H/4, W/4]."""
        B, T, C, H, W = frames.shape
        if H % 4 or W % 4:
            raise ConfigError("model.height", f"frame size {H}x{W} is not divisible by 4")
        x = ops.reshape(frames, (B * T, C, H, W))
        for conv, norm in zip(self.convs, self.norms):
            x = ops.gelu(norm(conv(x)))
        return ops.reshape(x, (B, T, self.c_hid, H // 4, W // 4))


def sinusoidal_encoding(length: int, dim: int) -> np.ndarray:
    """PE[t, 2i] = sin(t / 10000^(2i/dim)), PE[t, 2i+1] = cos(t / 10000^(2i/dim))."""
    pe = np.zeros((length, dim))
    t = np.arange(length)[:, None]
    two_i = np.arange(0, dim, 2)
    angle = t / np.power(10000.0, two_i / dim)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : dim // 2])
    return pe


def normalize_boxes(boxes, height: int, width: int) -> np.ndarray:
    """Pixel (cx, cy, w, h) -> fractions of the frame: x-quantities over W, y-quantities over H."""
    boxes = np.asarray(boxes, dtype=float)
    if not np.all(np.isfinite(boxes)):
        raise ValueError("non-finite bounding box")
    return boxes / np.array([width, height, width, height], dtype=float)


def denormalize_boxes(boxes, height: int, width: int) -> np.ndarray:
    return np.asarray(boxes, dtype=float) * np.array([width, height, width, height], dtype=float)


class BoxEmbedding(Module):
    def __init__(self, dim: int, rng):
        self.proj = Linear(4, dim, rng)
        self.dim = dim

    def forward(self, boxes: Tensor) -> Tensor:
        """Normalised boxes [B, T, 4] -> S [B, T, dim]."""
        if not np.all(np.isfinite(boxes.data)):
            raise ValueError("non-finite bounding box")
        pe = Tensor(sinusoidal_encoding(boxes.shape[1], self.dim), dtype=boxes.dtype)
        return self.proj(boxes) + pe
