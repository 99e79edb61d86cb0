"""Plain single-branch video predictor: spatial embedding, a standard pre-LN
transformer encoder over the folded token grid, and the video decoder.

It shares no encoder code with the two-branch model and serves as the
reference for the configuration with every target-aware component switched off.
"""

from __future__ import annotations

import numpy as np

from .decoders import VideoDecoder
from .embedding import SpatialEmbedding
from .encoder import fold, unfold
from .tensor import Tensor, get_dtype
from .tensor.nn import MLP, LayerNorm, Module, MultiHeadAttention, Parameter


class TransformerBlock(Module):
    def __init__(self, dim: int, heads: int, rng, ratio: int = 4):
        self.norm1 = LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, heads, rng)
        self.norm2 = LayerNorm(dim)
        self.mlp = MLP(dim, rng, ratio)

    def forward(self, x: Tensor) -> Tensor:
        x = self.attn(self.norm1(x)) + x
        return self.mlp(self.norm2(x)) + x


class VideoTransformer(Module):
    def __init__(self, channels, height, width, t_in, t_out, c_hid, c_dec, depth, heads, rng,
                 ratio: int = 4, pos_embed: bool = True):
        dim = t_in * c_hid
        self.grid = (t_in, height // 4, width // 4)
        self.spatial = SpatialEmbedding(channels, c_hid, rng)
        if pos_embed:
            self.pos = Parameter((0.02 * rng.standard_normal((1, self.grid[1] * self.grid[2], dim))).astype(get_dtype()))
        self.blocks = [TransformerBlock(dim, heads, rng, ratio) for _ in range(depth)]
        self.decoder = VideoDecoder(t_in, t_out, c_hid, c_dec, channels, rng)

    def forward(self, frames) -> Tensor:
        frames = frames if isinstance(frames, Tensor) else Tensor(frames, dtype=get_dtype())
        x = fold(self.spatial(frames))
        if hasattr(self, "pos"):
            x = x + self.pos
        for block in self.blocks:
            x = block(x)
        return self.decoder(unfold(x, *self.grid))


def copy_parameters(src: Module, dst: Module) -> None:
    """Copy parameters positionally (both modules list them in the same order)."""
    a, b = src.parameters(), dst.parameters()
    if len(a) != len(b):
        raise ValueError(f"parameter counts differ: {len(a)} vs {len(b)}")
    for i, (p, q) in enumerate(zip(a, b)):
        if p.shape != q.shape:
            raise ValueError(f"parameter {i}: shape {p.shape} vs {q.shape}")
        q.data = np.array(p.data, dtype=q.dtype, copy=True)
