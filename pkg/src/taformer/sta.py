"""Spatiotemporal attention over the folded token grid.

Spatial attention is multi-head self-attention over the layer-normed
concatenation of video tokens and ROI messengers; the first ``h*w`` output
rows are the spatial attention map, the remaining rows the updated
messengers. Temporal attention is a squeeze-excitation gate over the
channel (time x hidden) axis. The block output gates the raw token stream
with the rank-1 product of both.
"""

from __future__ import annotations

from .tensor import Tensor, ops
from .tensor.nn import LayerNorm, Linear, Module, MultiHeadAttention


class JointAttention(Module):
    """LN + MHSA over ``[tokens; messengers]``, split back into the two groups.

    ``collect=False`` keeps messengers as read-only context: tokens attend to
    them, but messenger rows are not updated.
    """

    def __init__(self, dim: int, heads: int, rng):
        self.norm = LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, heads, rng)

    def forward(self, tokens: Tensor, messengers: Tensor | None = None, collect: bool = True,
                return_weights: bool = False):
        n = tokens.shape[1]
        if messengers is None or messengers.shape[1] == 0:
            out, w = self.attn(self.norm(tokens), return_weights=True)
            result = (out, None)
        elif collect:
            joint = self.norm(ops.concat([tokens, messengers], axis=1))
            out, w = self.attn(joint, return_weights=True)
            result = (out[:, :n], out[:, n:])
        else:
            joint = self.norm(ops.concat([tokens, messengers], axis=1))
            out, w = self.attn(joint[:, :n], context=joint, return_weights=True)
            result = (out, None)
        return result + (w,) if return_weights else result


class TemporalAttention(Module):
    """Average-pool over positions, C' -> C'/r -> C' with GELU, sigmoid gate."""

    def __init__(self, dim: int, reduction: int, rng):
        self.fc1 = Linear(dim, dim // reduction, rng)
        self.fc2 = Linear(dim // reduction, dim, rng)

    def forward(self, tokens: Tensor) -> Tensor:
        pooled = ops.mean(tokens, axis=1, keepdims=True)
        return ops.sigmoid(self.fc2(ops.gelu(self.fc1(pooled))))


class STABlock(Module):
    def __init__(self, dim: int, heads: int, reduction: int, rng):
        self.spatial = JointAttention(dim, heads, rng)
        self.temporal = TemporalAttention(dim, reduction, rng)

    def forward(self, tokens: Tensor, messengers: Tensor | None = None, collect: bool = True):
        """F [B, hw, C'], T_R [B, M, C'] -> (F' = (A_t ⊗ A_s) ⊙ F, updated T_R or None)."""
        a_s, msg = self.spatial(tokens, messengers, collect)
        a_t = self.temporal(tokens)
        return gate(a_t, a_s, tokens), msg


def gate(a_t: Tensor, a_s: Tensor, tokens: Tensor) -> Tensor:
    """Rank-1 joint gate: A_t [B,1,C'] broadcast over the spatial rows of A_s [B,hw,C']."""
    return a_t * a_s * tokens
