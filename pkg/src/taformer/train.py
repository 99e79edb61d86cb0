"""Training loop, checkpoints and run directories."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import losses
from .data import Manifest, WindowDataset, WindowSpec, adapt_sot
from .embedding import denormalize_boxes, normalize_boxes
from .model import Prediction, TAFormer
from .optim import Adam, onecycle_lr
from .tensor import NumericalError, Tensor, no_grad, precision
from .tensor import serialize

log = logging.getLogger(__name__)

OUT_ENV = "TAFORMER_OUT"
TRACE_HEADER = "step,l_video,l_motion,l_gaussian,total,lr"
MANIFEST_NAME = "manifest.txt"


class TrainingAborted(RuntimeError):
    """Raised on a non-finite loss or parameter; the last good checkpoint is kept."""


def run_dir(cfg: cfgmod.RunConfig) -> Path:
    root = cfg.train.out_dir or os.environ.get(OUT_ENV, "runs")
    return Path(root) / cfg.train.name


def window_spec(cfg: cfgmod.RunConfig) -> WindowSpec:
    return WindowSpec(cfg.model.t_in, cfg.model.t_out, cfg.data.stride)


def load_manifest(cfg: cfgmod.RunConfig) -> Manifest:
    """Read ``<root>/manifest.txt``, building it with the adapter when missing."""
    root = Path(cfg.data.root)
    if not root.is_dir():
        raise cfgmod.ConfigError("data.root", f"dataset directory {root} does not exist")
    path = root / MANIFEST_NAME
    if path.exists():
        return Manifest.load(path)
    manifest = adapt_sot(root, window_spec(cfg), cfgmod.split_fractions(cfg.data.splits), cfg.data.split_seed)
    manifest.save(path)
    return manifest


def load_split(cfg: cfgmod.RunConfig, split: str) -> WindowDataset:
    records = load_manifest(cfg).split(split)
    if not records:
        raise cfgmod.ConfigError("data.splits", f"split {split!r} of {cfg.data.root} has no windows")
    m = cfg.model
    return WindowDataset(cfg.data.root, records, window_spec(cfg), (m.height, m.width), m.channels)


def total_steps(cfg: cfgmod.RunConfig, n_samples: int) -> int:
    if cfg.train.max_steps > 0:
        return cfg.train.max_steps
    return cfg.train.epochs * math.ceil(n_samples / cfg.train.batch_size)


def batch_order(seed: int, n: int, batch_size: int, step: int) -> np.ndarray:
    """Indices of the batch used at ``step``; each epoch's shuffle depends only on (seed, epoch)."""
    per_epoch = math.ceil(n / batch_size)
    epoch, k = divmod(step, per_epoch)
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return perm[k * batch_size:(k + 1) * batch_size]


def compute_losses(model: TAFormer, frames: np.ndarray, boxes_px: np.ndarray):
    """Teacher-forced forward on a window batch -> (LossParts, total, Prediction)."""
    cfg = model.cfg
    m, lc = cfg.model, cfg.loss
    t = m.t_in
    future_norm = normalize_boxes(boxes_px[:, t:], m.height, m.width)
    pred = model(frames[:, :t], boxes_px[:, :t], teacher=future_norm)
    target = Tensor(frames[:, t:], dtype=pred.frames.dtype if pred.frames is not None else None)
    video = motion = gauss = None
    if pred.frames is not None:
        video = losses.video_loss(pred.frames, target)
    if pred.boxes is not None:
        motion = losses.motion_loss(pred.boxes, Tensor(future_norm, dtype=pred.boxes.dtype))
    if lc.tsgl and pred.frames is not None and pred.boxes is not None:
        pred_px = denormalize_boxes(pred.boxes.data, m.height, m.width)
        gauss = losses.tsgl(pred.frames, target, pred_px, boxes_px[:, t:], lc.sigma_x, lc.sigma_y)
    parts = losses.LossParts(video, motion, gauss)
    return parts, losses.total_loss(parts, lc.lambda1, lc.lambda2), pred


# --- checkpoints -------------------------------------------------------------------

def checkpoint_tensors(model: TAFormer, opt: Adam | None) -> dict:
    tensors = {f"param/{k}": p.data for k, p in model.named_parameters()}
    if opt is not None:
        names = [k for k, _ in model.named_parameters()]
        tensors.update({f"adam_m/{k}": a for k, a in zip(names, opt.m)})
        tensors.update({f"adam_v/{k}": a for k, a in zip(names, opt.v)})
    return tensors


def save_checkpoint(path, model: TAFormer, opt: Adam | None, step: int, total: int) -> None:
    meta = {
        "config": cfgmod.dumps(model.cfg),
        "step": int(step),
        "total_steps": int(total),
        "adam_t": int(opt.t) if opt is not None else 0,
        "seed": int(model.cfg.train.seed),
        "dtype": model.cfg.train.dtype,
    }
    tmp = Path(str(path) + ".tmp")
    serialize.save(tmp, checkpoint_tensors(model, opt), meta)
    os.replace(tmp, path)


@dataclass
class Checkpoint:
    cfg: cfgmod.RunConfig
    tensors: dict
    meta: dict

    def params(self) -> dict:
        return {k[len("param/"):]: v for k, v in self.tensors.items() if k.startswith("param/")}

    def moments(self, prefix: str) -> list:
        return [v for k, v in self.tensors.items() if k.startswith(prefix + "/")]

    def build_model(self) -> TAFormer:
        with precision(self.cfg.train.dtype):
            model = TAFormer(self.cfg)
            model.load_state_dict(self.params())
        return model


def load_checkpoint(path) -> Checkpoint:
    tensors, meta = serialize.load(path)
    cfg = cfgmod.parse_text(meta["config"]).validate()
    return Checkpoint(cfg, tensors, meta)


# --- training ------------------------------------------------------------------------

@dataclass
class TrainResult:
    out_dir: Path
    trace: list  # rows (step, l_video, l_motion, l_gaussian, total, lr)
    checkpoint: Path


def format_trace_row(row) -> str:
    step, *vals = row
    return ",".join([str(step)] + [repr(float(v)) for v in vals])


def read_trace(path) -> list:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path}: not a loss trace")
    rows = []
    for line in lines[1:]:
        step, *vals = line.split(",")
        rows.append((int(step), *(float(v) for v in vals)))
    return rows


def train(cfg: cfgmod.RunConfig, out_dir=None, resume=None) -> TrainResult:
    """Train with Adam + OneCycle on the ``train`` split and write the run directory."""
    cfg.validate()
    out = Path(out_dir) if out_dir is not None else run_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    cfgmod.save(cfg, out / "config.txt")
    dataset = load_split(cfg, "train")
    n = len(dataset)
    total = total_steps(cfg, n)
    oc = cfg.optim
    log.info("training %s: %d windows, %d steps, dtype %s", cfg.train.name, n, total, cfg.train.dtype)

    with precision(cfg.train.dtype):
        model = TAFormer(cfg)
        opt = Adam(model.parameters(), oc.lr, oc.beta1, oc.beta2, oc.eps, oc.grad_clip)
        start = 0
        trace_path = out / "loss_trace.csv"
        trace = []
        if resume is not None:
            ck = load_checkpoint(resume)
            model.load_state_dict(ck.params())
            opt.load_state(ck.meta["adam_t"], ck.moments("adam_m"), ck.moments("adam_v"))
            start = ck.meta["step"]
            trace = [r for r in read_trace(trace_path) if r[0] < start] if trace_path.exists() else []
        last_ckpt = out / "last.ckpt"

        with open(trace_path, "w") as fh:
            fh.write(TRACE_HEADER + "\n")
            for row in trace:
                fh.write(format_trace_row(row) + "\n")
            for step in range(start, total):
                lr = onecycle_lr(step, total, oc.lr, oc.div_factor, oc.final_div_factor, oc.pct_start)
                frames, boxes = dataset.batch(batch_order(cfg.train.seed, n, cfg.train.batch_size, step))
                try:
                    parts, loss, _ = compute_losses(model, frames.astype(cfg.train.dtype), boxes)
                    model.zero_grad()
                    loss.backward()
                except NumericalError as exc:
                    fh.flush()
                    raise TrainingAborted(f"step {step}: {exc}; last good checkpoint kept at {last_ckpt}") from exc
                row = (step, *parts.values(), loss.item(), lr)
                trace.append(row)
                fh.write(format_trace_row(row) + "\n")
                opt.step(lr)
                if not all(np.all(np.isfinite(p.data)) for p in model.parameters()):
                    raise TrainingAborted(f"step {step}: non-finite parameters after the update")
                done = step + 1
                if done % cfg.train.ckpt_every == 0 or done == total:
                    save_checkpoint(out / f"step_{done:06d}.ckpt", model, opt, done, total)
                    save_checkpoint(last_ckpt, model, opt, done, total)
                if step % 50 == 0:
                    log.info("step %d/%d loss %.6f lr %.2e", step, total, row[4], lr)
    return TrainResult(out, trace, last_ckpt)


def predict_batch(model: TAFormer, frames: np.ndarray, boxes_px: np.ndarray) -> tuple:
    """Inference on windows [B, T+T', ...]: returns (frames [B,T',C,H,W] or None, boxes px [B,T',4] or None)."""
    m = model.cfg.model
    with precision(model.cfg.train.dtype), no_grad():
        pred: Prediction = model(frames[:, :m.t_in].astype(model.cfg.train.dtype), boxes_px[:, :m.t_in])
    pf = None if pred.frames is None else np.asarray(pred.frames.data, dtype=float)
    pb = None if pred.boxes is None else denormalize_boxes(np.asarray(pred.boxes.data, dtype=float), m.height, m.width)
    return pf, pb
