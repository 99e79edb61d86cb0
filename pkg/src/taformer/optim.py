"""Adam with a OneCycle learning-rate plan."""

from __future__ import annotations

import math

import numpy as np


def onecycle_lr(step: int, total: int, max_lr: float, div_factor: float = 25.0,
                final_div_factor: float = 1e4, pct_start: float = 0.3) -> float:
    """Cosine warm-up from max_lr/div_factor to max_lr over the first pct_start of
    ``total`` steps, then cosine annealing down to max_lr/(div_factor*final_div_factor)."""
    if total < 1:
        raise ValueError("total steps must be >= 1")
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside [0, {total}]")
    initial = max_lr / div_factor
    final = initial / final_div_factor
    peak = pct_start * total
    if step <= peak and peak > 0:
        frac = step / peak
        return _cosine(initial, max_lr, frac)
    frac = (step - peak) / (total - peak) if total > peak else 1.0
    return _cosine(max_lr, final, frac)


def _cosine(start: float, end: float, frac: float) -> float:
    return end + (start - end) * (1 + math.cos(math.pi * frac)) / 2


class Adam:
    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, grad_clip: float = 0.0):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.grad_clip = grad_clip
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def grad_norm(self) -> float:
        return math.sqrt(sum(float(np.sum(p.grad.astype(float) ** 2)) for p in self.params if p.grad is not None))

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        scale = 1.0
        if self.grad_clip > 0:
            norm = self.grad_norm()
            if norm > self.grad_clip:
                scale = self.grad_clip / norm
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad * scale
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            # overflow is detected by the caller's finiteness check, not warned about here
            with np.errstate(over="ignore", invalid="ignore"):
                p.data -= (lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(p.data.dtype)

    def state(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}

    def load_state(self, t: int, m: list, v: list) -> None:
        if len(m) != len(self.params) or len(v) != len(self.params):
            raise ValueError("optimiser state does not match the parameter list")
        for p, a, b in zip(self.params, m, v):
            if a.shape != p.data.shape or b.shape != p.data.shape:
                raise ValueError(f"optimiser moment shape {a.shape} vs parameter {p.data.shape}")
        self.t = int(t)
        self.m = [np.array(a, dtype=p.data.dtype) for a, p in zip(m, self.params)]
        self.v = [np.array(b, dtype=p.data.dtype) for b, p in zip(v, self.params)]
