"""Central finite-difference gradient checking (64-bit)."""

from __future__ import annotations

import numpy as np

from .core import Tensor, no_grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)


def _scalarize(out, proj):
    return float(np.sum(out.data * proj))


def check_gradients(fn, inputs, rng, h: float = 1e-5, max_coords: int | None = None):
    """Compare analytic and finite-difference gradients of ``fn`` w.r.t. ``inputs``.

    ``fn`` maps the input tensors to one output tensor. The output is contracted
    with a fixed random projection so every output element contributes. When
    ``max_coords`` is set, only that many randomly chosen coordinates per input
    are perturbed. Returns the worst relative error over all inputs.
    """
    for t in inputs:
        if t.dtype != np.float64:
            raise TypeError("gradient checks need float64 tensors")
        t.grad = None
    out = fn(*inputs)
    proj = rng.standard_normal(out.shape)
    (out * Tensor(proj)).sum().backward()
    analytic = [np.zeros(t.shape) if t.grad is None else t.grad.copy() for t in inputs]

    worst = 0.0
    with no_grad():
        for t, ga in zip(inputs, analytic):
            flat = t.data.reshape(-1)
            coords = np.arange(flat.size)
            if max_coords is not None and flat.size > max_coords:
                coords = rng.choice(flat.size, size=max_coords, replace=False)
            numeric = np.empty(coords.size)
            for n, i in enumerate(coords):
                orig = flat[i]
                flat[i] = orig + h
                fp = _scalarize(fn(*inputs), proj)
                flat[i] = orig - h
                fm = _scalarize(fn(*inputs), proj)
                flat[i] = orig
                numeric[n] = (fp - fm) / (2 * h)
            worst = max(worst, relative_error(ga.reshape(-1)[coords], numeric))
    return worst
