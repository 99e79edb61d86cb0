"""End-to-end model: (frames, boxes) -> (future frames, future boxes)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .decoders import MotionDecoder, VideoDecoder
from .embedding import BoxEmbedding, SpatialEmbedding, normalize_boxes
from .encoder import TAEncoder
from .tensor import Tensor, get_dtype
from .tensor.nn import Module


@dataclass
class Prediction:
    frames: Tensor | None  # [B, T', C, H, W] in (0, 1)
    boxes: Tensor | None  # [B, T', 4] normalised (cx, cy, w, h)


class TAFormer(Module):
    def __init__(self, cfg: RunConfig, rng=None):
        cfg.validate()
        if rng is None:
            rng = np.random.default_rng(cfg.train.seed)
        m = cfg.model
        self.cfg = cfg
        needs_frames = m.video_branch or (cfg.ism.enabled and cfg.ism.init_roi == "roi")
        if needs_frames:
            self.spatial = SpatialEmbedding(m.channels, m.c_hid, rng)
        if m.motion_branch:
            self.box_embed = BoxEmbedding(m.embed_dim, rng)
        self.encoder = TAEncoder(cfg, rng)
        if m.video_branch:
            self.video_decoder = VideoDecoder(m.t_in, m.t_out, m.c_hid, m.c_dec, m.channels, rng)
        if m.motion_branch:
            self.motion_decoder = MotionDecoder(m.embed_dim, m.c_dec, m.dec_heads, m.dec_layers, rng, m.mlp_ratio)

    def forward(self, frames, boxes_px, teacher=None) -> Prediction:
        """frames [B,T,C,H,W]; boxes_px [B,T,4] pixel centre format (array, or Tensor to
        differentiate through the boxes); teacher [B,T',4] normalised future boxes
        (teacher forcing) or None (autoregressive inference)."""
        m = self.cfg.model
        frames = frames if isinstance(frames, Tensor) else Tensor(frames, dtype=get_dtype())
        if isinstance(boxes_px, Tensor):
            # differentiable path: gradients reach the caller's box tensor
            scale = np.array([1 / m.width, 1 / m.height] * 2, dtype=boxes_px.dtype)
            boxes_norm = boxes_px * Tensor(scale, dtype=boxes_px.dtype)
            boxes_px = np.asarray(boxes_px.data, dtype=float)
        else:
            boxes_px = np.asarray(boxes_px, dtype=float)
            boxes_norm = Tensor(normalize_boxes(boxes_px, m.height, m.width), dtype=frames.dtype)
        z = self.spatial(frames) if hasattr(self, "spatial") else None
        s0 = self.box_embed(boxes_norm) if m.motion_branch else None
        video, motion = self.encoder(z, s0, boxes_px, boxes_norm)

        frames_out = self.video_decoder(video) if m.video_branch else None
        boxes_out = None
        if m.motion_branch:
            last = boxes_norm[:, -1]
            if teacher is not None:
                teacher = teacher if isinstance(teacher, Tensor) else Tensor(teacher, dtype=frames.dtype)
                boxes_out = self.motion_decoder.teacher_forced(motion, last, teacher)
            else:
                boxes_out = self.motion_decoder.generate(motion, last, m.t_out)
        return Prediction(frames_out, boxes_out)
