"""Evaluation reports, single-window prediction output and synthetic dataset generation.

Report files (in ``<out>/eval_<split>/``):

* ``metrics.tsv``: tab-separated, one row per window, columns
  ``seq_id start mse mae ssim psnr roi_mse miou ade``.
* ``summary.txt``: ``key=value`` lines, ``split``, ``windows`` and the mean of
  every metric column over the rows of ``metrics.tsv``.
* ``horizon.png``: per-future-step SSIM / MSE / IoU.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import plotting
from .data import Manifest, Record, adapt_sot, generate_synthetic, load_window, write_dataset, write_pnm
from .metrics import COLUMNS, MetricReport, per_step, sample_metrics
from .train import MANIFEST_NAME, Checkpoint, load_checkpoint, load_split, predict_batch, window_spec

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("seq_id", "start") + COLUMNS
COMPAT_KEYS = ("channels", "height", "width", "t_in", "t_out")


def check_compatible(ckpt_cfg: cfgmod.RunConfig, data_cfg: cfgmod.RunConfig) -> None:
    diffs = [k for k in COMPAT_KEYS if getattr(ckpt_cfg.model, k) != getattr(data_cfg.model, k)]
    if diffs:
        a = ", ".join(f"{k}={getattr(ckpt_cfg.model, k)}" for k in diffs)
        b = ", ".join(f"{k}={getattr(data_cfg.model, k)}" for k in diffs)
        raise cfgmod.ConfigError(f"model.{diffs[0]}", f"checkpoint config has {a} but evaluation config has {b}")


def _eval_config(ck: Checkpoint, data_cfg: cfgmod.RunConfig | None, data_root: str | None):
    cfg = cfgmod.copy(ck.cfg)
    if data_cfg is not None:
        check_compatible(ck.cfg, data_cfg)
        cfg.data = data_cfg.data
    if data_root is not None:
        cfg.data.root = str(data_root)
    return cfg


def format_value(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_report(report: MetricReport, split: str, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(REPORT_COLUMNS)]
    for row in report.rows:
        lines.append("\t".join(format_value(row[c]) for c in REPORT_COLUMNS))
    (out / "metrics.tsv").write_text("\n".join(lines) + "\n")
    agg = report.aggregate()
    kv = [f"split={split}", f"windows={len(report.rows)}"] + [f"{k}={format_value(agg[k])}" for k in COLUMNS]
    (out / "summary.txt").write_text("\n".join(kv) + "\n")
    plotting.horizon_metrics(report.step_means(), out / "horizon.png")


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition("=")
        try:
            out[key] = float(value)
        except ValueError:
            out[key] = value
    return out


def read_report(path) -> list:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split("\t")
    rows = []
    for line in lines[1:]:
        vals = line.split("\t")
        row = dict(zip(header, vals))
        rows.append({k: (v if k == "seq_id" else int(v) if k == "start" else float(v)) for k, v in row.items()})
    return rows


def evaluate(ckpt_path, split: str = "test", out_dir=None, data_cfg=None, data_root=None,
             gt_as_pred: bool = False, batch_size: int | None = None) -> tuple:
    """Autoregressive inference over a split -> (MetricReport, report directory)."""
    ck = load_checkpoint(ckpt_path)
    cfg = _eval_config(ck, data_cfg, data_root)
    model = ck.build_model()
    model.cfg = cfg
    dataset = load_split(cfg, split)
    m = cfg.model
    t = m.t_in
    bs = batch_size or cfg.train.batch_size
    report = MetricReport()
    for lo in range(0, len(dataset), bs):
        idx = list(range(lo, min(lo + bs, len(dataset))))
        frames, boxes = dataset.batch(idx)
        if gt_as_pred:
            pf = frames[:, t:] if m.video_branch else None
            pb = boxes[:, t:] if m.motion_branch else None
        else:
            pf, pb = predict_batch(model, frames, boxes)
        for j, i in enumerate(idx):
            rec = dataset.records[i]
            a = None if pf is None else pf[j]
            b = None if pb is None else pb[j]
            report.add(rec.seq_id, rec.start, sample_metrics(a, frames[j, t:], b, boxes[j, t:]),
                       per_step(a, frames[j, t:], b, boxes[j, t:]))
    out = Path(out_dir) if out_dir is not None else Path(ckpt_path).parent / f"eval_{split}"
    write_report(report, split, out)
    log.info("eval %s: %s", split, " ".join(f"{k}={v:.4f}" for k, v in report.aggregate().items()))
    return report, out


# --- prediction ----------------------------------------------------------------------

RED = np.array([1.0, 0.0, 0.0])


def draw_box(frame: np.ndarray, box) -> np.ndarray:
    """[C, H, W] frame -> RGB [3, H, W] copy with the box perimeter painted red."""
    rgb = np.repeat(frame, 3, axis=0) if frame.shape[0] == 1 else frame.copy()
    _, H, W = rgb.shape
    cx, cy, w, h = (float(v) for v in box)
    x0 = min(max(int(round(cx - w / 2)), 0), W - 1)
    y0 = min(max(int(round(cy - h / 2)), 0), H - 1)
    x1 = min(max(int(round(cx + w / 2)) - 1, x0), W - 1)
    y1 = min(max(int(round(cy + h / 2)) - 1, y0), H - 1)
    for y in (y0, y1):
        rgb[:, y, x0:x1 + 1] = RED[:, None]
    for x in (x0, x1):
        rgb[:, y0:y1 + 1, x] = RED[:, None]
    return rgb


def write_box_file(path, boxes: np.ndarray) -> None:
    """Centre-format pixel boxes, one ``cx,cy,w,h`` line per future step, full precision."""
    Path(path).write_text("".join(",".join(repr(float(v)) for v in b) + "\n" for b in boxes))


def read_box_file(path) -> np.ndarray:
    rows = [[float(v) for v in line.split(",")] for line in Path(path).read_text().splitlines() if line]
    return np.array(rows, dtype=float).reshape(-1, 4)


def predict(ckpt_path, seq_id: str, start: int, out_dir=None, data_root=None) -> Path:
    """Predict one window and write frames/, boxes.txt, overlay/ and trajectory.png."""
    ck = load_checkpoint(ckpt_path)
    cfg = _eval_config(ck, None, data_root)
    model = ck.build_model()
    m = cfg.model
    root = Path(cfg.data.root)
    if not (root / seq_id).is_dir():
        raise FileNotFoundError(f"sequence {seq_id!r} not found under {root}")
    frames, boxes = load_window(root, Record(seq_id, start, ""), window_spec(cfg), (m.height, m.width), m.channels)
    if len(frames) != cfg.window:
        raise ValueError(f"{seq_id}: window at {start} needs {cfg.window} frames, found {len(frames)}")
    pf, pb = predict_batch(model, frames[None], boxes[None])
    out = Path(out_dir) if out_dir is not None else Path(ckpt_path).parent / f"predict_{seq_id}_{start}"
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "overlay").mkdir(parents=True, exist_ok=True)
    future = pf[0] if pf is not None else frames[m.t_in:]
    ext = ".pgm" if m.channels == 1 else ".ppm"
    if pf is not None:
        for k, frame in enumerate(pf[0]):
            write_pnm(out / "frames" / f"{k + 1:06d}{ext}", frame)
    if pb is not None:
        write_box_file(out / "boxes.txt", pb[0])
        for k, (frame, box) in enumerate(zip(future, pb[0])):
            write_pnm(out / "overlay" / f"{k + 1:06d}.ppm", draw_box(frame, box))
    plotting.trajectory(boxes[:m.t_in], boxes[m.t_in:], None if pb is None else pb[0],
                        out / "trajectory.png", (m.height, m.width))
    return out


# --- synthetic data ------------------------------------------------------------------

def datagen(cfg: cfgmod.RunConfig) -> Manifest:
    """Write the synthetic dataset and its manifest under ``data.root``."""
    cfg.validate()
    d, m = cfg.data, cfg.model
    root = Path(d.root)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise cfgmod.ConfigError("data.root", f"cannot create {root}: {exc}") from None
    samples = generate_synthetic(d.seed, d.n_sequences, m.height, m.width, d.seq_len, m.channels)
    write_dataset(samples, root)
    manifest = adapt_sot(root, window_spec(cfg), cfgmod.split_fractions(d.splits), d.split_seed)
    manifest.save(root / MANIFEST_NAME)
    if manifest.rejected:
        log.warning("generated dataset has %d rejected sequences", len(manifest.rejected))
    log.info("wrote %d sequences, %d windows to %s", len(samples), len(manifest.records), root)
    return manifest

