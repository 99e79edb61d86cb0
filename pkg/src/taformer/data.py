"""Datasets: a synthetic aerial-scene generator and an adapter for single-object
tracking sequences laid out as ``<root>/<seq_id>/frames/NNNNNN.<ext>`` plus
``<root>/<seq_id>/boxes.txt`` (one ``x,y,w,h`` top-left box per frame)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)

FRAME_EXTS = (".pgm", ".ppm", ".pnm", ".png", ".jpg", ".jpeg")
SPLITS = ("train", "val", "test")


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class WindowSpec:
    t_in: int
    t_out: int
    stride: int

    @property
    def width(self) -> int:
        return self.t_in + self.t_out


@dataclass
class Sample:
    frames: np.ndarray  # [N, C, H, W] in [0, 1]
    boxes: np.ndarray  # [N, 4] pixel centre format
    seq_id: str
    split: str = ""
    motion: str = ""


def window_sequences(seq_len: int, spec: WindowSpec) -> list:
    """(start, end) pairs with end exclusive: start = 0, stride, ... while start + width <= seq_len."""
    if seq_len < spec.width:
        log.info("sequence of length %d shorter than window %d: no windows", seq_len, spec.width)
        return []
    return [(s, s + spec.width) for s in range(0, seq_len - spec.width + 1, spec.stride)]


def window_count(seq_len: int, spec: WindowSpec) -> int:
    if seq_len < spec.width:
        return 0
    return (seq_len - spec.width) // spec.stride + 1


# --- synthetic scenes ---------------------------------------------------------

MOTIONS = ("linear", "arc", "turn")


def _texture(rng, channels):
    k = 4
    return {
        "freq": rng.uniform(0.5, 2.5, size=(channels, k, 2)) * rng.choice([-1, 1], size=(channels, k, 2)),
        "phase": rng.uniform(0, 2 * np.pi, size=(channels, k)),
        "amp": rng.uniform(0.02, 0.05, size=(channels, k)),
        "base": rng.uniform(0.4, 0.5, size=channels),
    }


def _render_texture(tex, xs, ys, height, width):
    """Background value at continuous coordinates (xs, ys) for every channel -> [C, ...]."""
    f = tex["freq"]
    arg = (2 * np.pi * (f[..., 0, None, None] * xs / width + f[..., 1, None, None] * ys / height)
           + tex["phase"][..., None, None])
    return tex["base"][:, None, None] + np.sum(tex["amp"][..., None, None] * np.sin(arg), axis=1)


def _trajectory(rng, kind, n, size, height, width):
    """Centres [n, 2] keeping a (w, h) box fully inside the frame, or None if sampling failed."""
    w, h = size
    lo = np.array([w / 2, h / 2])
    hi = np.array([width - w / 2, height - h / 2])
    start = rng.uniform(lo, hi)
    t = np.arange(n, dtype=float)[:, None]
    speed = rng.uniform(0.4, 1.2) * min(height, width) / 32
    ang = rng.uniform(0, 2 * np.pi)
    v = speed * np.array([np.cos(ang), np.sin(ang)])
    if kind == "linear":
        centres = start + v * t
    elif kind == "arc":
        radius = rng.uniform(0.2, 0.4) * min(height, width)
        omega = speed / radius * rng.choice([-1.0, 1.0])
        theta0 = rng.uniform(0, 2 * np.pi)
        pivot = start - radius * np.array([np.cos(theta0), np.sin(theta0)])
        th = theta0 + omega * t[:, 0]
        centres = pivot + radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        turn_at = rng.integers(max(1, n // 4), max(2, 3 * n // 4))
        turn = rng.uniform(np.pi / 4, 3 * np.pi / 4) * rng.choice([-1.0, 1.0])
        v2 = speed * np.array([np.cos(ang + turn), np.sin(ang + turn)])
        centres = np.where(t <= turn_at, start + v * t, start + v * turn_at + v2 * (t - turn_at))
    if np.all(centres >= lo) and np.all(centres <= hi):
        return centres
    return None


def _coverage(shape, cx, cy, w, h, xs, ys):
    """Fraction of each pixel covered by the sprite, from 4x4 supersampling."""
    if shape == "rect":
        inside = (np.abs(xs - cx) < w / 2) & (np.abs(ys - cy) < h / 2)
    else:
        inside = (xs - cx) ** 2 + (ys - cy) ** 2 < (w / 2) ** 2
    return inside.mean(axis=(-1, -2))


def _sample_grid(height, width, ss=4):
    off = (np.arange(ss) + 0.5) / ss
    ys = (np.arange(height)[:, None, None, None] + off[None, None, :, None])
    xs = (np.arange(width)[None, :, None, None] + off[None, None, None, :])
    return np.broadcast_to(xs, (height, width, ss, ss)), np.broadcast_to(ys, (height, width, ss, ss))


def _sprite(rng, height, width, n, scale):
    for _ in range(100):
        shape = rng.choice(["rect", "disk"])
        if shape == "rect":
            w, h = rng.uniform(scale[0], scale[1], size=2) * np.array([width, height])
        else:
            w = h = rng.uniform(scale[0], scale[1]) * min(height, width)
        kind = MOTIONS[rng.integers(len(MOTIONS))]
        centres = _trajectory(rng, kind, n, (w, h), height, width)
        if centres is not None:
            return str(shape), float(w), float(h), kind, centres
    raise RuntimeError("could not place a sprite inside the frame")


def synthesize_sequence(rng, length: int, height: int, width: int, channels: int = 1,
                        motion: str | None = None) -> Sample:
    tex = _texture(rng, channels)
    drift = rng.uniform(-1.0, 1.0, size=2) * min(height, width) / 32
    xs, ys = _sample_grid(height, width)
    px = np.arange(width)[None, :] + 0.5
    py = np.arange(height)[:, None] + 0.5

    for _ in range(100):
        shape, w, h, kind, centres = _sprite(rng, height, width, length, (0.22, 0.34))
        if motion is None or kind == motion:
            break
    bright = rng.random() < 0.5
    level = rng.uniform(0.88, 0.95) if bright else rng.uniform(0.02, 0.08)
    distractors = []
    for _ in range(int(rng.integers(0, 3))):
        d = _sprite(rng, height, width, length, (0.08, 0.14))
        distractors.append((d, rng.uniform(0.6, 0.7) if not bright else rng.uniform(0.15, 0.25)))

    frames = np.empty((length, channels, height, width))
    for t in range(length):
        img = _render_texture(tex, px + drift[0] * t, py + drift[1] * t, height, width)
        for (dshape, dw, dh, _, dc), dlevel in distractors:
            cov = _coverage(dshape, dc[t, 0], dc[t, 1], dw, dh, xs, ys)
            img = img * (1 - cov) + dlevel * cov
        cov = _coverage(shape, centres[t, 0], centres[t, 1], w, h, xs, ys)
        frames[t] = img * (1 - cov) + level * cov
    boxes = np.column_stack([centres, np.full(length, w), np.full(length, h)])
    return Sample(np.clip(frames, 0.0, 1.0), boxes, "", motion=kind)


def generate_synthetic(seed: int, n: int, height: int, width: int, length: int,
                       channels: int = 1) -> list:
    """``n`` deterministic sequences; sequence ``i`` depends only on (seed, i)."""
    if height % 4 or width % 4:
        raise ValueError(f"frame size {height}x{width} must be divisible by 4")
    samples = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        s = synthesize_sequence(rng, length, height, width, channels)
        s.seq_id = f"seq{i:03d}"
        samples.append(s)
    return samples


# --- image and annotation I/O --------------------------------------------------------

def write_pnm(path, image: np.ndarray) -> None:
    """[C, H, W] floats in [0, 1] -> binary PGM (C=1) or PPM (C=3)."""
    q = np.round(np.clip(image, 0, 1) * 255).astype(np.uint8)
    c, h, w = q.shape
    magic = {1: b"P5", 3: b"P6"}[c]
    body = q[0] if c == 1 else q.transpose(1, 2, 0)
    Path(path).write_bytes(magic + f"\n{w} {h}\n255\n".encode() + body.tobytes())


def read_frame(path, channels: int, size: tuple | None = None) -> np.ndarray:
    """Image file -> [C, H, W] float in [0, 1], optionally resized to (H, W)."""
    with Image.open(path) as im:
        im = im.convert("L" if channels == 1 else "RGB")
        if size is not None and (im.height, im.width) != tuple(size):
            im = im.resize((size[1], size[0]), Image.BILINEAR)
        arr = np.asarray(im, dtype=float) / 255.0
    return arr[None] if channels == 1 else arr.transpose(2, 0, 1)


def frame_size(path) -> tuple:
    with Image.open(path) as im:
        return im.height, im.width


def format_boxes(boxes_center: np.ndarray) -> str:
    """Centre-format boxes -> ``x,y,w,h`` top-left lines."""
    lines = []
    for cx, cy, w, h in np.asarray(boxes_center, dtype=float):
        lines.append(f"{cx - w / 2:.6f},{cy - h / 2:.6f},{w:.6f},{h:.6f}")
    return "\n".join(lines) + "\n"


def parse_boxes(path) -> np.ndarray:
    """``x,y,w,h`` lines -> centre-format [N, 4]; ``NaN`` entries are kept as NaN rows."""
    rows = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.replace("\t", ",").replace(" ", ",").split(",")
        parts = [p for p in parts if p]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise AnnotationError(f"{path}:{lineno}: cannot parse {line!r}") from None
        if len(vals) != 4:
            raise AnnotationError(f"{path}:{lineno}: expected 4 values, got {len(vals)}")
        x, y, w, h = vals
        rows.append([x + w / 2, y + h / 2, w, h])
    return np.array(rows, dtype=float).reshape(-1, 4)


def clamp_boxes(boxes: np.ndarray, height: int, width: int) -> np.ndarray:
    b = np.asarray(boxes, dtype=float)
    x0 = np.clip(b[:, 0] - b[:, 2] / 2, 0, width)
    x1 = np.clip(b[:, 0] + b[:, 2] / 2, 0, width)
    y0 = np.clip(b[:, 1] - b[:, 3] / 2, 0, height)
    y1 = np.clip(b[:, 1] + b[:, 3] / 2, 0, height)
    return np.column_stack([(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0])


def scale_boxes(boxes: np.ndarray, src: tuple, dst: tuple) -> np.ndarray:
    """Rescale centre-format boxes from frame size src=(H, W) to dst=(H, W)."""
    sy, sx = dst[0] / src[0], dst[1] / src[1]
    return np.asarray(boxes, dtype=float) * np.array([sx, sy, sx, sy])


def write_dataset(samples, root) -> None:
    root = Path(root)
    for s in samples:
        fdir = root / s.seq_id / "frames"
        fdir.mkdir(parents=True, exist_ok=True)
        ext = ".pgm" if s.frames.shape[1] == 1 else ".ppm"
        for t, frame in enumerate(s.frames):
            write_pnm(fdir / f"{t + 1:06d}{ext}", frame)
        (root / s.seq_id / "boxes.txt").write_text(format_boxes(s.boxes))


# --- adapter ------------------------------------------------------------------------

@dataclass(frozen=True)
class Record:
    seq_id: str
    start: int
    split: str


@dataclass
class Manifest:
    records: list = field(default_factory=list)
    rejected: dict = field(default_factory=dict)  # seq_id -> diagnostic

    def split(self, name: str) -> list:
        return [r for r in self.records if r.split == name]

    def sequences(self, name: str) -> set:
        return {r.seq_id for r in self.records if r.split == name}

    def dumps(self) -> str:
        return "".join(f"{r.seq_id},{r.start},{r.split}\n" for r in self.records)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Manifest":
        recs = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise AnnotationError(f"{path}:{lineno}: expected seq_id,start,split")
            recs.append(Record(parts[0], int(parts[1]), parts[2]))
        return cls(recs)


def frame_files(seq_dir) -> list:
    fdir = Path(seq_dir) / "frames"
    return sorted(p for p in fdir.iterdir() if p.suffix.lower() in FRAME_EXTS)


def assign_splits(seq_ids, fractions, seed: int = 0) -> dict:
    """Per-sequence split assignment with cumulative rounding of the fractions."""
    ids = sorted(seq_ids)
    order = np.random.default_rng(seed).permutation(len(ids))
    total = float(sum(fractions))
    bounds = [round(c / total * len(ids)) for c in np.cumsum(fractions)]
    out, lo = {}, 0
    for name, hi in zip(SPLITS, bounds):
        for k in order[lo:hi]:
            out[ids[k]] = name
        lo = hi
    return out


def adapt_sot(root, spec: WindowSpec, fractions=(0.7, 0.2, 0.1), seed: int = 0) -> Manifest:
    """Validate every sequence under ``root``, assign splits per sequence and enumerate windows."""
    root = Path(root)
    seq_dirs = sorted(p for p in root.iterdir() if p.is_dir() and (p / "frames").is_dir())
    valid, manifest = {}, Manifest()
    for d in seq_dirs:
        files = frame_files(d)
        boxes = parse_boxes(d / "boxes.txt")
        if len(files) != len(boxes):
            msg = f"{d.name}: {len(files)} frames but {len(boxes)} annotation lines"
            log.warning("rejecting sequence %s", msg)
            manifest.rejected[d.name] = msg
            continue
        valid[d.name] = boxes
    splits = assign_splits(valid, fractions, seed)
    for seq_id in sorted(valid):
        bad = ~np.all(np.isfinite(valid[seq_id]), axis=1)
        for start, end in window_sequences(len(valid[seq_id]), spec):
            if bad[start:end].any():
                continue
            manifest.records.append(Record(seq_id, start, splits[seq_id]))
    return manifest


def load_window(root, record: Record, spec: WindowSpec, size: tuple, channels: int):
    """Frames [width, C, H, W] resized to ``size`` and boxes [width, 4] scaled and clamped."""
    seq_dir = Path(root) / record.seq_id
    files = frame_files(seq_dir)[record.start:record.start + spec.width]
    boxes = parse_boxes(seq_dir / "boxes.txt")[record.start:record.start + spec.width]
    src = frame_size(files[0])
    frames = np.stack([read_frame(f, channels, size) for f in files])
    boxes = clamp_boxes(scale_boxes(boxes, src, size), *size)
    return frames, boxes


class WindowDataset:
    """In-memory cache of the windows listed in a manifest split."""

    def __init__(self, root, records, spec: WindowSpec, size: tuple, channels: int):
        self.records = list(records)
        self.items = [load_window(root, r, spec, size, channels) for r in self.records]

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def batch(self, indices):
        frames = np.stack([self.items[i][0] for i in indices])
        boxes = np.stack([self.items[i][1] for i in indices])
        return frames, boxes


def split_counts(n: int, fractions) -> list:
    total = float(sum(fractions))
    bounds = [0] + [round(c / total * n) for c in np.cumsum(fractions)]
    return [b - a for a, b in zip(bounds[:-1], bounds[1:])]


def mean_contrast(sample: Sample) -> float:
    """Smallest per-frame |mean(box region) - mean(outside)| over the sequence."""
    worst = math.inf
    _, _, H, W = sample.frames.shape
    for frame, (cx, cy, w, h) in zip(sample.frames, sample.boxes):
        x0, x1 = int(round(cx - w / 2)), int(round(cx + w / 2))
        y0, y1 = int(round(cy - h / 2)), int(round(cy + h / 2))
        mask = np.zeros((H, W), dtype=bool)
        mask[max(y0, 0):y1, max(x0, 0):x1] = True
        worst = min(worst, abs(frame[:, mask].mean() - frame[:, ~mask].mean()))
    return worst
