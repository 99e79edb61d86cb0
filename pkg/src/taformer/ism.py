"""Messenger tokens shared between the video and motion branches.

Initialisation builds M ROI tokens from box-pooled features and N state
tokens from the flattened box sequence. Collecting lets each messenger set
join its branch's attention; passing mixes both sets with MLPs across
messengers and across channels.
"""

from __future__ import annotations

import numpy as np

from .sta import JointAttention
from .tensor import Tensor, get_dtype, ops
from .tensor.nn import MLP, LayerNorm, Module, Parameter

FEATURE_STRIDE = 4


def roi_cells(box, h: int, w: int, stride: int = FEATURE_STRIDE) -> list:
    """Feature cells (row, col) whose centres lie inside the pixel box scaled by 1/stride.

    The scaled box is clamped to the feature map. When no centre falls inside,
    the single cell containing the (clamped) box centre is returned.
    """
    cx, cy, bw, bh = (float(v) / stride for v in box)
    x0, x1 = max(cx - bw / 2, 0.0), min(cx + bw / 2, float(w))
    y0, y1 = max(cy - bh / 2, 0.0), min(cy + bh / 2, float(h))
    cols = [j for j in range(w) if x0 <= j + 0.5 <= x1]
    rows = [i for i in range(h) if y0 <= i + 0.5 <= y1]
    if rows and cols:
        return [(i, j) for i in rows for j in cols]
    i = min(max(int(np.floor(cy)), 0), h - 1)
    j = min(max(int(np.floor(cx)), 0), w - 1)
    return [(i, j)]


def roi_pool_weights(boxes_px: np.ndarray, h: int, w: int) -> np.ndarray:
    """[B, T, 4] pixel boxes -> averaging weights [B, T, h*w, 1]."""
    B, T, _ = boxes_px.shape
    weights = np.zeros((B, T, h * w, 1))
    for b in range(B):
        for t in range(T):
            cells = roi_cells(boxes_px[b, t], h, w)
            for i, j in cells:
                weights[b, t, i * w + j, 0] = 1.0 / len(cells)
    return weights


class RoiTokenInit(Module):
    """Pool the box region of each frame, concatenate over time, apply M independent maps C' -> C'."""

    def __init__(self, dim: int, count: int, rng):
        bound = np.sqrt(6.0 / (2 * dim))
        self.weight = Parameter(rng.uniform(-bound, bound, (count, dim, dim)).astype(get_dtype()))
        self.bias = Parameter(np.zeros((count, 1, dim), dtype=get_dtype()))

    def pool(self, z: Tensor, boxes_px: np.ndarray) -> Tensor:
        """Z [B,T,C_hid,h,w] -> pooled r [B,T,C_hid]."""
        B, T, C, h, w = z.shape
        weights = Tensor(roi_pool_weights(boxes_px, h, w), dtype=z.dtype)
        r = ops.matmul(ops.reshape(z, (B, T, C, h * w)), weights)
        return ops.reshape(r, (B, T, C))

    def forward(self, z: Tensor, boxes_px: np.ndarray) -> Tensor:
        B, T, C = z.shape[:3]
        r = ops.reshape(self.pool(z, boxes_px), (B, 1, 1, T * C))
        tokens = ops.matmul(r, self.weight) + self.bias  # [B, M, 1, C']
        return ops.reshape(tokens, (B, self.weight.shape[0], T * C))


class StateTokenInit(Module):
    """Flatten the normalised box sequence (4T) and apply N independent maps 4T -> C' -> C'."""

    def __init__(self, t_in: int, dim: int, count: int, rng):
        b1 = np.sqrt(6.0 / (4 * t_in + dim))
        b2 = np.sqrt(6.0 / (2 * dim))
        self.w1 = Parameter(rng.uniform(-b1, b1, (count, 4 * t_in, dim)).astype(get_dtype()))
        self.b1 = Parameter(np.zeros((count, 1, dim), dtype=get_dtype()))
        self.w2 = Parameter(rng.uniform(-b2, b2, (count, dim, dim)).astype(get_dtype()))
        self.b2 = Parameter(np.zeros((count, 1, dim), dtype=get_dtype()))

    def forward(self, boxes_norm: Tensor) -> Tensor:
        B, T, _ = boxes_norm.shape
        x = ops.reshape(boxes_norm, (B, 1, 1, 4 * T))
        hidden = ops.gelu(ops.matmul(x, self.w1) + self.b1)
        tokens = ops.matmul(hidden, self.w2) + self.b2
        return ops.reshape(tokens, (B, self.w1.shape[0], self.w2.shape[-1]))


class RandomTokens(Module):
    """Learned messengers drawn at random, independent of the input."""

    def __init__(self, dim: int, count: int, rng):
        self.tokens = Parameter((0.02 * rng.standard_normal((1, count, dim))).astype(get_dtype()))

    def forward(self, batch: int) -> Tensor:
        return self.tokens + Tensor(np.zeros((batch, 1, 1)), dtype=self.tokens.dtype)


class MotionCollect(JointAttention):
    """Motion-branch attention over ``[S; T_S]``; same mechanics as the spatial attention."""


class MessagePassing(Module):
    """Mix the joint messenger set ``[T_R; T_S]``.

    A token-mixing MLP (rows M+N -> 4(M+N) -> M+N, shared across channels) lets
    every messenger read every other one; a channel MLP shared across rows then
    transforms each messenger. Both steps are pre-LN with a residual, so zero
    MLP weights leave the messengers unchanged.
    """

    def __init__(self, dim: int, count: int, rng, ratio: int = 4):
        self.token_norm = LayerNorm(dim)
        self.token_mlp = MLP(count, rng, ratio)
        self.norm = LayerNorm(dim)
        self.mlp = MLP(dim, rng, ratio)

    def forward(self, roi: Tensor, state: Tensor):
        """(T_R [B,M,C'], T_S [B,N,C']) -> (T_R', T_S') with the same shapes."""
        m = roi.shape[1]
        joint = ops.concat([roi, state], axis=1)
        mixed = ops.swapaxes(self.token_mlp(ops.swapaxes(self.token_norm(joint), 1, 2)), 1, 2)
        joint = mixed + joint
        out = self.mlp(self.norm(joint)) + joint
        return out[:, :m], out[:, m:]
