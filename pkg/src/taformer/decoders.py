"""Video decoder (channel projection + four transposed convs) and the
autoregressive motion decoder (causal transformer decoder emitting box deltas)."""

from __future__ import annotations

import numpy as np

from .embedding import sinusoidal_encoding
from .encoder import fold
from .tensor import Tensor, no_grad, ops
from .tensor.nn import MLP, Conv2d, ConvTranspose2d, GroupNorm, LayerNorm, Linear, Module, MultiHeadAttention

# (kernel, stride, padding): size-preserving and size-doubling layers alternate
VIDEO_LAYERS = ((3, 1, 1), (4, 2, 1), (3, 1, 1), (4, 2, 1))


class VideoDecoder(Module):
    def __init__(self, t_in: int, t_out: int, c_hid: int, c_dec: int, channels: int, rng):
        self.proj = Linear(t_in * c_hid, t_out * c_dec, rng)
        self.deconvs = [ConvTranspose2d(c_dec, c_dec, k, rng, stride=s, padding=p) for k, s, p in VIDEO_LAYERS]
        self.norms = [GroupNorm(c_dec, min(8, c_dec)) for _ in VIDEO_LAYERS]
        self.head = Conv2d(c_dec, channels, 1, rng)
        self.t_out, self.c_dec = t_out, c_dec

    def forward(self, video: Tensor) -> Tensor:
        """F~ [B, T, C_hid, h, w] -> Y^ [B, T', C, 4h, 4w] in (0, 1)."""
        B, _, _, h, w = video.shape
        x = self.proj(fold(video))  # [B, hw, T'*C_dec]
        x = ops.transpose(ops.reshape(x, (B, h, w, self.t_out, self.c_dec)), (0, 3, 4, 1, 2))
        x = ops.reshape(x, (B * self.t_out, self.c_dec, h, w))
        for deconv, norm in zip(self.deconvs, self.norms):
            x = ops.gelu(norm(deconv(x)))
        x = ops.sigmoid(self.head(x))
        _, C, H, W = x.shape
        return ops.reshape(x, (B, self.t_out, C, H, W))


class DecoderLayer(Module):
    def __init__(self, dim: int, heads: int, rng, ratio: int = 4):
        self.norm1 = LayerNorm(dim)
        self.self_attn = MultiHeadAttention(dim, heads, rng)
        self.norm2 = LayerNorm(dim)
        self.cross_attn = MultiHeadAttention(dim, heads, rng)
        self.norm3 = LayerNorm(dim)
        self.mlp = MLP(dim, rng, ratio)

    def forward(self, x: Tensor, memory: Tensor, mask: np.ndarray, return_weights: bool = False):
        attn, weights = self.self_attn(self.norm1(x), mask=mask, return_weights=True)
        x = x + attn
        x = x + self.cross_attn(self.norm2(x), context=memory)
        x = x + self.mlp(self.norm3(x))
        return (x, weights) if return_weights else x


def causal_mask(n: int) -> np.ndarray:
    return np.tril(np.ones((n, n), dtype=bool))


class MotionDecoder(Module):
    """Queries are embedded previous boxes (the last observed box first); each
    output position emits a delta added to its query box."""

    def __init__(self, enc_dim: int, dim: int, heads: int, layers: int, rng, ratio: int = 4):
        self.query = Linear(4, dim, rng)
        self.memory_proj = Linear(enc_dim, dim, rng)
        self.layers = [DecoderLayer(dim, heads, rng, ratio) for _ in range(layers)]
        self.norm = LayerNorm(dim)
        self.head = Linear(dim, 4, rng)
        self.head.weight.data *= 0.1
        self.dim = dim

    def _deltas(self, memory: Tensor, query_boxes: Tensor, return_weights: bool = False):
        n = query_boxes.shape[1]
        pe = Tensor(sinusoidal_encoding(n, self.dim), dtype=memory.dtype)
        x = self.query(query_boxes) + pe
        mem = self.memory_proj(memory)
        mask = causal_mask(n)
        weights = []
        for layer in self.layers:
            x, w = layer(x, mem, mask, return_weights=True)
            weights.append(w)
        out = self.head(self.norm(x))
        return (out, weights) if return_weights else out

    def teacher_forced(self, memory: Tensor, last_box: Tensor, teacher: Tensor, return_weights: bool = False):
        """One parallel pass with ground-truth previous boxes as queries.

        memory [B,T,C'], last_box [B,4], teacher [B,T',4] (normalised) -> boxes [B,T',4].
        """
        B, n, _ = teacher.shape
        queries = ops.concat([ops.reshape(last_box, (B, 1, 4)), teacher[:, : n - 1]], axis=1)
        deltas = self._deltas(memory, queries, return_weights)
        if return_weights:
            deltas, weights = deltas
            return queries + deltas, weights
        return queries + deltas

    def generate(self, memory: Tensor, last_box: Tensor, steps: int) -> Tensor:
        """Greedy autoregressive decoding, one box per step; w and h are clamped at zero."""
        B = last_box.shape[0]
        boxes = [ops.reshape(last_box, (B, 1, 4))]
        floor = np.array([-np.inf, -np.inf, 0.0, 0.0])
        with no_grad():
            for k in range(steps):
                queries = ops.concat(boxes, axis=1)
                delta = self._deltas(memory, queries)[:, k:k + 1]
                nxt = boxes[-1] + delta
                nxt = Tensor(np.maximum(nxt.data, floor), dtype=memory.dtype)
                boxes.append(nxt)
        return ops.concat(boxes[1:], axis=1)
