"""Parameter containers and standard layers built on the tensor ops."""

from __future__ import annotations

import math

import numpy as np

from . import ops
from .core import Tensor, get_dtype


class Parameter(Tensor):
    __slots__ = ()

    def __init__(self, data):
        super().__init__(data, requires_grad=True)


class Module:
    """Base container. Parameters and sub-modules are discovered from attributes
    (including lists of modules) in assignment order, which fixes the checkpoint layout."""

    def named_parameters(self, prefix: str = ""):
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")
                    elif isinstance(item, Parameter):
                        yield f"{full}.{i}", item

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> dict:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise KeyError(f"state mismatch: missing={missing} unexpected={unexpected}")
        for name, p in own.items():
            arr = np.asarray(state[name])
            if arr.shape != p.shape:
                raise ValueError(f"{name}: shape {arr.shape} does not match parameter {p.shape}")
            p.data = arr.astype(p.dtype, copy=True)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def _uniform(rng, shape, bound):
    return rng.uniform(-bound, bound, size=shape).astype(get_dtype())


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng, bias: bool = True):
        bound = math.sqrt(6.0 / (n_in + n_out))
        self.weight = Parameter(_uniform(rng, (n_in, n_out), bound))
        self.bias = Parameter(np.zeros(n_out, dtype=get_dtype())) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        y = ops.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = Parameter(np.ones(dim, dtype=get_dtype()))
        self.beta = Parameter(np.zeros(dim, dtype=get_dtype()))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, -1, self.gamma, self.beta, self.eps)


class GroupNorm(Module):
    """Group normalisation over [B, C, H, W] with ``channels_per_group`` channels per group."""

    def __init__(self, channels: int, channels_per_group: int, eps: float = 1e-5):
        cpg = math.gcd(channels, channels_per_group)
        self.groups = channels // cpg
        self.gamma = Parameter(np.ones((1, channels, 1, 1), dtype=get_dtype()))
        self.beta = Parameter(np.zeros((1, channels, 1, 1), dtype=get_dtype()))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        B, C, H, W = x.shape
        g = ops.reshape(x, (B, self.groups, (C // self.groups) * H * W))
        g = ops.layer_norm(g, -1, eps=self.eps)
        return ops.reshape(g, (B, C, H, W)) * self.gamma + self.beta


class Conv2d(Module):
    def __init__(self, c_in, c_out, kernel, rng, stride=1, padding=0):
        fan_in, fan_out = c_in * kernel * kernel, c_out * kernel * kernel
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        self.weight = Parameter(_uniform(rng, (c_out, c_in, kernel, kernel), bound))
        self.bias = Parameter(np.zeros((1, c_out, 1, 1), dtype=get_dtype()))
        self.stride, self.padding = stride, padding

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.stride, self.padding) + self.bias


class ConvTranspose2d(Module):
    def __init__(self, c_in, c_out, kernel, rng, stride=1, padding=0):
        fan_in, fan_out = c_in * kernel * kernel, c_out * kernel * kernel
        bound = math.sqrt(6.0 / (fan_in + fan_out)) * stride
        self.weight = Parameter(_uniform(rng, (c_in, c_out, kernel, kernel), bound))
        self.bias = Parameter(np.zeros((1, c_out, 1, 1), dtype=get_dtype()))
        self.stride, self.padding = stride, padding

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv_transpose2d(x, self.weight, self.stride, self.padding) + self.bias


class MLP(Module):
    """dim -> ratio·dim -> dim with GELU between."""

    def __init__(self, dim: int, rng, ratio: int = 4, dim_in: int | None = None):
        self.fc1 = Linear(dim_in or dim, ratio * dim, rng)
        self.fc2 = Linear(ratio * dim, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(ops.gelu(self.fc1(x)))


class MultiHeadAttention(Module):
    def __init__(self, dim: int, heads: int, rng):
        if heads < 1 or dim % heads:
            raise ValueError(f"attention heads ({heads}) must divide the width ({dim})")
        self.heads = heads
        self.q = Linear(dim, dim, rng)
        self.k = Linear(dim, dim, rng)
        self.v = Linear(dim, dim, rng)
        self.o = Linear(dim, dim, rng)

    def _split(self, x: Tensor) -> Tensor:
        B, n, d = x.shape
        return ops.transpose(ops.reshape(x, (B, n, self.heads, d // self.heads)), (0, 2, 1, 3))

    def forward(self, x: Tensor, context: Tensor | None = None, mask=None, return_weights: bool = False):
        """Attention of ``x`` over ``context`` (self-attention when omitted).

        x: [B, n, d]; context: [B, m, d]; mask: bool [n, m], True where attending is allowed.
        With ``return_weights`` the softmax weights [B, heads, n, m] come back as a numpy array.
        """
        context = x if context is None else context
        B, n, d = x.shape
        q, k, v = self._split(self.q(x)), self._split(self.k(context)), self._split(self.v(context))
        scores = ops.matmul(q, ops.swapaxes(k, -1, -2)) * (1.0 / math.sqrt(d // self.heads))
        weights = ops.softmax(scores, axis=-1, mask=mask)
        out = ops.matmul(weights, v)
        out = self.o(ops.reshape(ops.transpose(out, (0, 2, 1, 3)), (B, n, d)))
        if return_weights:
            return out, weights.data
        return out
