"""Differentiable primitives.

Every op is pure: it reads ``x.data`` and returns a new Tensor whose backward
closure maps the output gradient to one gradient per parent.
"""

from __future__ import annotations

import builtins
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import Tensor

GELU_C = math.sqrt(2.0 / math.pi)
GELU_A = 0.044715


class DimensionError(ValueError):
    pass


def _pair(dtype_src: Tensor, x):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype_src.dtype), dtype=dtype_src.dtype)


def _lift2(a, b):
    if isinstance(a, Tensor):
        return a, _pair(a, b)
    return _pair(b, a), b


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _broadcast_shapes(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from None


# --- elementwise arithmetic -------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _lift2(a, b)
    _broadcast_shapes(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._wrap(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = _lift2(a, b)
    _broadcast_shapes(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._wrap(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = _lift2(a, b)
    _broadcast_shapes(a, b, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._wrap(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = _lift2(a, b)
    _broadcast_shapes(a, b, "div")
    with np.errstate(divide="ignore", invalid="ignore"):  # reported as NumericalError below
        out = a.data / b.data

    def backward(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return Tensor._wrap(out, (a, b), backward, "div")


def neg(x: Tensor) -> Tensor:
    return Tensor._wrap(-x.data, (x,), lambda g: (-g,), "neg")


def square(x: Tensor) -> Tensor:
    return Tensor._wrap(x.data * x.data, (x,), lambda g: (2.0 * g * x.data,), "square")


def abs(x: Tensor) -> Tensor:
    return Tensor._wrap(np.abs(x.data), (x,), lambda g: (g * np.sign(x.data),), "abs")


def where(cond, a, b) -> Tensor:
    """Select from ``a`` where the constant boolean ``cond`` holds, else ``b``."""
    a, b = _lift2(a, b)
    cond = np.asarray(cond, dtype=bool)
    shape = np.broadcast_shapes(cond.shape, a.shape, b.shape)

    def backward(g):
        zero = np.zeros_like(g)
        return (_unbroadcast(np.where(cond, g, zero), a.shape),
                _unbroadcast(np.where(cond, zero, g), b.shape))

    out = np.where(cond, a.data, b.data)
    return Tensor._wrap(np.broadcast_to(out, shape).copy(), (a, b), backward, "where")


def stop_gradient(x: Tensor) -> Tensor:
    return x.detach()


# --- activations -------------------------------------------------------------

def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)
    return Tensor._wrap(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor._wrap(x.data * mask, (x,), lambda g: (g * mask,), "relu")


def gelu(x: Tensor) -> Tensor:
    """tanh-approximated GELU: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³)))."""
    d = x.data
    inner = GELU_C * (d + GELU_A * d ** 3)
    t = np.tanh(inner)
    out = 0.5 * d * (1.0 + t)

    def backward(g):
        dinner = GELU_C * (1.0 + 3.0 * GELU_A * d * d)
        return (g * (0.5 * (1.0 + t) + 0.5 * d * (1.0 - t * t) * dinner),)

    return Tensor._wrap(out, (x,), backward, "gelu")


def softmax(x: Tensor, axis: int = -1, mask=None) -> Tensor:
    """Max-stabilised softmax. ``mask`` (bool, True = keep) zeroes excluded entries exactly."""
    d = x.data
    if mask is not None:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), d.shape)
        if not mask.any(axis=axis).all():
            raise DimensionError("softmax: a row is fully masked")
        d = np.where(mask, d, -np.inf)
    e = np.exp(d - d.max(axis=axis, keepdims=True))
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor._wrap(out, (x,), backward, "softmax")


# --- reductions and normalisation ----------------------------------------------

def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def sum(x: Tensor, axis=None, keepdims=False) -> Tensor:
    axes = _norm_axes(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor._wrap(np.asarray(out), (x,), backward, "sum")


def mean(x: Tensor, axis=None, keepdims=False) -> Tensor:
    axes = _norm_axes(axis, x.ndim)
    n = 1
    for a in axes:
        n *= x.shape[a]
    out = x.data.mean(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / n, x.shape).copy(),)

    return Tensor._wrap(np.asarray(out), (x,), backward, "mean")


def layer_norm(x: Tensor, axis=-1, gamma: Tensor | None = None, beta: Tensor | None = None,
               eps: float = 1e-5) -> Tensor:
    """Normalise over ``axis`` (int or tuple) with eps inside the square root, then affine."""
    axes = _norm_axes(axis, x.ndim)
    n = 1
    for a in axes:
        n *= x.shape[a]
    mu = x.data.mean(axis=axes, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat
    if gamma is not None:
        out = out * gamma.data
    if beta is not None:
        out = out + beta.data

    parents = [x]
    if gamma is not None:
        parents.append(gamma)
    if beta is not None:
        parents.append(beta)

    def backward(g):
        dxhat = g * gamma.data if gamma is not None else g
        s1 = dxhat.sum(axis=axes, keepdims=True)
        s2 = (dxhat * xhat).sum(axis=axes, keepdims=True)
        grads = [inv * (dxhat - s1 / n - xhat * s2 / n)]
        if gamma is not None:
            grads.append(_unbroadcast(g * xhat, gamma.shape))
        if beta is not None:
            grads.append(_unbroadcast(g, beta.shape))
        return tuple(grads)

    return Tensor._wrap(out, tuple(parents), backward, "layer_norm")


# --- linear algebra ------------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = _lift2(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul: operands need ndim >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner extents differ, {a.shape} @ {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError(f"matmul: batch extents incompatible, {a.shape} @ {b.shape}") from None

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor._wrap(a.data @ b.data, (a, b), backward, "matmul")


# --- shape ops -----------------------------------------------------------------

def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot view {x.shape} as {shape}") from None
    return Tensor._wrap(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x: Tensor, axes=None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    axes = tuple(a % x.ndim for a in axes)
    inv = tuple(np.argsort(axes))
    return Tensor._wrap(x.data.transpose(axes), (x,), lambda g: (g.transpose(inv),), "transpose")


def swapaxes(x: Tensor, a: int, b: int) -> Tensor:
    axes = list(range(x.ndim))
    axes[a], axes[b] = axes[b], axes[a]
    return transpose(x, axes)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise DimensionError("concat: empty input")
    ref = tensors[0]
    axis = axis % ref.ndim
    for t in tensors[1:]:
        if t.ndim != ref.ndim or any(t.shape[i] != ref.shape[i] for i in range(ref.ndim) if i != axis):
            raise DimensionError(f"concat: shapes {ref.shape} and {t.shape} differ off axis {axis}")
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)
    out = np.concatenate([t.data for t in tensors], axis=axis)

    def backward(g):
        grads = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            idx = [builtins.slice(None)] * g.ndim
            idx[axis] = builtins.slice(lo, hi)
            grads.append(g[tuple(idx)])
        return tuple(grads)

    return Tensor._wrap(out, tuple(tensors), backward, "concat")


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    axis = axis % (tensors[0].ndim + 1)
    expanded = [reshape(t, t.shape[:axis] + (1,) + t.shape[axis:]) for t in tensors]
    return concat(expanded, axis=axis)


def _check_index(shape, index):
    if not isinstance(index, tuple):
        index = (index,)
    if Ellipsis in index:
        at = index.index(Ellipsis)
        n_real = builtins.sum(1 for i in index if i is not None and i is not Ellipsis)
        index = index[:at] + (builtins.slice(None),) * (len(shape) - n_real) + index[at + 1:]
    dim = 0
    for item in index:
        if item is None:
            continue
        if dim >= len(shape):
            raise IndexError(f"slice: too many indices for shape {shape}")
        n = shape[dim]
        if isinstance(item, (int, np.integer)):
            if not -n <= item < n:
                raise IndexError(f"slice: index {item} out of range for axis {dim} of extent {n}")
        elif isinstance(item, builtins.slice):
            for bound in (item.start, item.stop):
                if bound is not None and not -n <= bound <= n:
                    raise IndexError(f"slice: bound {bound} out of range for axis {dim} of extent {n}")
        else:
            raise TypeError(f"slice: unsupported index {item!r}")
        dim += 1


def slice(x: Tensor, index) -> Tensor:
    """Basic (view) indexing with bounds checking; gradient scatters back."""
    _check_index(x.shape, index)
    out = x.data[index]

    def backward(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return Tensor._wrap(np.array(out, copy=True), (x,), backward, "slice")


# --- convolution -----------------------------------------------------------------

def _conv_out(n, k, stride, padding):
    return (n + 2 * padding - k) // stride + 1


def conv2d(x: Tensor, k: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation. x: [B,Cin,H,W], k: [Cout,Cin,kh,kw] -> [B,Cout,H',W']."""
    if x.ndim != 4 or k.ndim != 4:
        raise DimensionError(f"conv2d: expected 4-d input and kernel, got {x.shape} and {k.shape}")
    B, Cin, H, W = x.shape
    Cout, Ck, kh, kw = k.shape
    if Ck != Cin:
        raise DimensionError(f"conv2d: input channels {Cin} vs kernel channels {Ck} ({x.shape}, {k.shape})")
    if kh > H + 2 * padding or kw > W + 2 * padding:
        raise DimensionError(f"conv2d: kernel {k.shape} larger than padded input {x.shape} (padding={padding})")
    s, p = stride, padding
    Ho, Wo = _conv_out(H, kh, s, p), _conv_out(W, kw, s, p)
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::s, ::s][:, :, :Ho, :Wo]
    out = np.tensordot(win, k.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)

    def backward(g):
        gk = np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3]))
        cols = np.tensordot(g, k.data, axes=([1], [0]))  # [B,Ho,Wo,Cin,kh,kw]
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i:i + s * (Ho - 1) + 1:s, j:j + s * (Wo - 1) + 1:s] += cols[..., i, j].transpose(0, 3, 1, 2)
        gx = gxp[:, :, p:p + H, p:p + W] if p else gxp
        return gx, gk

    return Tensor._wrap(np.ascontiguousarray(out), (x, k), backward, "conv2d")


def conv_transpose2d(x: Tensor, k: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Adjoint of conv2d. x: [B,Cin,H,W], k: [Cin,Cout,kh,kw] -> [B,Cout,(H-1)s-2p+kh, ...]."""
    if x.ndim != 4 or k.ndim != 4:
        raise DimensionError(f"conv_transpose2d: expected 4-d input and kernel, got {x.shape} and {k.shape}")
    B, Cin, H, W = x.shape
    Ck, Cout, kh, kw = k.shape
    if Ck != Cin:
        raise DimensionError(f"conv_transpose2d: input channels {Cin} vs kernel {k.shape}")
    s, p = stride, padding
    Hf, Wf = (H - 1) * s + kh, (W - 1) * s + kw
    Ho, Wo = Hf - 2 * p, Wf - 2 * p
    if Ho < 1 or Wo < 1:
        raise DimensionError(f"conv_transpose2d: padding {p} leaves no output for input {x.shape}, kernel {k.shape}")
    cols = np.tensordot(x.data, k.data, axes=([1], [0]))  # [B,H,W,Cout,kh,kw]
    full = np.zeros((B, Cout, Hf, Wf), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            full[:, :, i:i + s * (H - 1) + 1:s, j:j + s * (W - 1) + 1:s] += cols[..., i, j].transpose(0, 3, 1, 2)
    out = full[:, :, p:p + Ho, p:p + Wo]

    def backward(g):
        gfull = np.pad(g, ((0, 0), (0, 0), (p, p), (p, p))) if p else g
        win = sliding_window_view(gfull, (kh, kw), axis=(2, 3))[:, :, ::s, ::s][:, :, :H, :W]
        gx = np.tensordot(win, k.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
        gk = np.tensordot(x.data, win, axes=([0, 2, 3], [0, 2, 3]))
        return np.ascontiguousarray(gx), gk

    return Tensor._wrap(np.ascontiguousarray(out), (x, k), backward, "conv_transpose2d")


def avg_pool2d(x: Tensor, kernel: int, stride: int | None = None) -> Tensor:
    if x.ndim != 4:
        raise DimensionError(f"avg_pool2d: expected [B,C,H,W], got {x.shape}")
    s = stride or kernel
    B, C, H, W = x.shape
    if kernel > H or kernel > W:
        raise DimensionError(f"avg_pool2d: kernel {kernel} larger than input {x.shape}")
    Ho, Wo = (H - kernel) // s + 1, (W - kernel) // s + 1
    win = sliding_window_view(x.data, (kernel, kernel), axis=(2, 3))[:, :, ::s, ::s][:, :, :Ho, :Wo]
    out = win.mean(axis=(4, 5))

    def backward(g):
        gx = np.zeros_like(x.data)
        share = g / (kernel * kernel)
        for i in range(kernel):
            for j in range(kernel):
                gx[:, :, i:i + s * (Ho - 1) + 1:s, j:j + s * (Wo - 1) + 1:s] += share
        return (gx,)

    return Tensor._wrap(out, (x,), backward, "avg_pool2d")
