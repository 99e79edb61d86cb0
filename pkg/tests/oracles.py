"""Brute-force reference implementations used as test oracles.

Everything here is written with explicit loops and shares no code with the
package, so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import math

import numpy as np


def conv2d_loop(x, k, stride=1, padding=0):
    B, C, H, W = x.shape
    O, _, kh, kw = k.shape
    xp = np.zeros((B, C, H + 2 * padding, W + 2 * padding))
    xp[:, :, padding:padding + H, padding:padding + W] = x
    Ho = (H + 2 * padding - kh) // stride + 1
    Wo = (W + 2 * padding - kw) // stride + 1
    out = np.zeros((B, O, Ho, Wo))
    for b in range(B):
        for o in range(O):
            for i in range(Ho):
                for j in range(Wo):
                    patch = xp[b, :, i * stride:i * stride + kh, j * stride:j * stride + kw]
                    out[b, o, i, j] = np.sum(patch * k[o])
    return out


def conv_transpose2d_loop(x, k, stride=1, padding=0):
    """Scatter form: every input pixel stamps the kernel into the (padded) output."""
    B, Ci, H, W = x.shape
    _, Co, kh, kw = k.shape
    Hf, Wf = (H - 1) * stride + kh, (W - 1) * stride + kw
    full = np.zeros((B, Co, Hf, Wf))
    for b in range(B):
        for c in range(Ci):
            for i in range(H):
                for j in range(W):
                    full[b, :, i * stride:i * stride + kh, j * stride:j * stride + kw] += x[b, c, i, j] * k[c]
    return full[:, :, padding:Hf - padding, padding:Wf - padding]


def iou_raster(a, b, res=8):
    """IoU by counting sub-pixel sample points on a grid covering both boxes.

    Corners are snapped to the 1/res grid, so for boxes whose corners lie on
    that grid the count is exact.
    """
    ax0, ay0, ax1, ay1 = a[0] - a[2] / 2, a[1] - a[3] / 2, a[0] + a[2] / 2, a[1] + a[3] / 2
    bx0, by0, bx1, by1 = b[0] - b[2] / 2, b[1] - b[3] / 2, b[0] + b[2] / 2, b[1] + b[3] / 2
    x0, x1 = min(ax0, bx0), max(ax1, bx1)
    y0, y1 = min(ay0, by0), max(ay1, by1)
    nx = int(round((x1 - x0) * res))
    ny = int(round((y1 - y0) * res))
    if nx == 0 or ny == 0:
        return 0.0
    xs = x0 + (np.arange(nx) + 0.5) / res
    ys = y0 + (np.arange(ny) + 0.5) / res
    inter = union = 0
    for y in ys:
        for x in xs:
            in_a = ax0 <= x <= ax1 and ay0 <= y <= ay1
            in_b = bx0 <= x <= bx1 and by0 <= y <= by1
            inter += in_a and in_b
            union += in_a or in_b
    return inter / union if union else 0.0


def ade_loop(pred, target):
    total = 0.0
    for p, t in zip(pred, target):
        total += math.sqrt((p[0] - t[0]) ** 2 + (p[1] - t[1]) ** 2)
    return total / len(pred)


def ssim_loop(a, b, size=11, sigma=1.5, data_range=1.0):
    """SSIM of two [H, W] images with explicit window loops."""
    c1, c2 = (0.01 * data_range) ** 2, (0.03 * data_range) ** 2
    r = (size - 1) / 2
    g = [math.exp(-((i - r) ** 2) / (2 * sigma ** 2)) for i in range(size)]
    s = sum(g)
    g = [v / s for v in g]
    H, W = a.shape
    vals = []
    for i in range(H - size + 1):
        for j in range(W - size + 1):
            ma = mb = saa = sbb = sab = 0.0
            for u in range(size):
                for v in range(size):
                    w = g[u] * g[v]
                    pa, pb = a[i + u, j + v], b[i + u, j + v]
                    ma += w * pa
                    mb += w * pb
                    saa += w * pa * pa
                    sbb += w * pb * pb
                    sab += w * pa * pb
            va, vb, cov = saa - ma * ma, sbb - mb * mb, sab - ma * mb
            vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return sum(vals) / len(vals)


def psnr_loop(a, b):
    err = sum((x - y) ** 2 for x, y in zip(a.ravel(), b.ravel())) / a.size
    return math.inf if err == 0 else 10 * math.log10(1.0 / err)


def roi_mse_loop(pred, target, boxes):
    """Per frame: MSE over pixels whose index lies in the rounded, clamped box (at least one pixel)."""
    T = target.shape[0]
    H, W = target.shape[-2:]
    total = 0.0
    for t in range(T):
        cx, cy, w, h = boxes[t]
        x0 = min(max(int(round(cx - w / 2)), 0), W - 1)
        y0 = min(max(int(round(cy - h / 2)), 0), H - 1)
        x1 = min(max(int(round(cx + w / 2)), x0 + 1), W)
        y1 = min(max(int(round(cy + h / 2)), y0 + 1), H)
        acc, n = 0.0, 0
        for y in range(y0, y1):
            for x in range(x0, x1):
                d = pred[t, ..., y, x] - target[t, ..., y, x]
                acc += float(np.sum(d * d))
                n += np.size(d)
        total += acc / n
    return total / T


def gaussian_field_loop(box, H, W, sx=50.0, sy=50.0):
    cx, cy, w, h = box
    out = np.empty((H, W))
    for y in range(H):
        for x in range(W):
            if abs(x - cx) < w / 2 and abs(y - cy) < h / 2:
                out[y, x] = 1.0
            else:
                out[y, x] = math.exp(-0.5 * ((x - cx) ** 2 / sx ** 2 + (y - cy) ** 2 / sy ** 2))
    return out


def window_enumeration(seq_len, width, stride):
    out, start = [], 0
    while start + width <= seq_len:
        out.append((start, start + width))
        start += stride
    return out
