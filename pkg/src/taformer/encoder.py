"""Two-branch target-aware transformer encoder.

Per layer (pre-LN throughout):

    video:   F^ = STA(F, T_R) + F          F = MLP(LN(F^)) + F^
    motion:  S^ = MHSA(LN([S; T_S])) + S   S = MLP(LN(S^)) + S^
    passing: [T_R; T_S] mixed across messengers, then MLP(LN(.)) + residual

Messengers that took part in attention also get a residual connection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, RunConfig
from .ism import MessagePassing, MotionCollect, RandomTokens, RoiTokenInit, StateTokenInit
from .sta import JointAttention, STABlock
from .tensor import Tensor, get_dtype, ops
from .tensor.nn import MLP, LayerNorm, Module, Parameter


@dataclass
class EncoderState:
    video: Tensor | None
    motion: Tensor | None
    roi: Tensor | None
    state: Tensor | None


def fold(z: Tensor) -> Tensor:
    """[B, T, C_hid, h, w] -> [B, h*w, T*C_hid]; channel index is t*C_hid + c."""
    B, T, C, h, w = z.shape
    return ops.reshape(ops.transpose(z, (0, 3, 4, 1, 2)), (B, h * w, T * C))


def unfold(tokens: Tensor, t: int, h: int, w: int) -> Tensor:
    B, _, width = tokens.shape
    c = width // t
    return ops.transpose(ops.reshape(tokens, (B, h, w, t, c)), (0, 3, 4, 1, 2))


class EncoderLayer(Module):
    def __init__(self, cfg: RunConfig, rng):
        m = cfg.model
        dim = m.embed_dim
        if m.video_branch:
            if m.sta:
                self.sta = STABlock(dim, m.heads, m.se_reduction, rng)
            else:
                self.video_attn = JointAttention(dim, m.heads, rng)
            self.video_norm = LayerNorm(dim)
            self.video_mlp = MLP(dim, rng, m.mlp_ratio)
        if m.motion_branch:
            self.motion_attn = MotionCollect(dim, m.heads, rng)
            self.motion_norm = LayerNorm(dim)
            self.motion_mlp = MLP(dim, rng, m.mlp_ratio)
        if cfg.ism.enabled and cfg.ism.pass_enabled:
            self.passing = MessagePassing(dim, cfg.ism.M + cfg.ism.N, rng, m.mlp_ratio)
        self.collect = cfg.ism.collect_enabled

    def video_step(self, tokens: Tensor, roi: Tensor | None):
        if hasattr(self, "sta"):
            gated, new_roi = self.sta(tokens, roi, self.collect)
        else:
            gated, new_roi = self.video_attn(tokens, roi, self.collect)
        tokens = gated + tokens
        tokens = self.video_mlp(self.video_norm(tokens)) + tokens
        return tokens, (new_roi + roi if new_roi is not None else roi)

    def motion_step(self, motion: Tensor, state: Tensor | None):
        attn, new_state = self.motion_attn(motion, state, self.collect)
        motion = attn + motion
        motion = self.motion_mlp(self.motion_norm(motion)) + motion
        return motion, (new_state + state if new_state is not None else state)

    def forward(self, st: EncoderState) -> EncoderState:
        video, roi = (self.video_step(st.video, st.roi) if st.video is not None else (None, st.roi))
        motion, state = (self.motion_step(st.motion, st.state) if st.motion is not None else (None, st.state))
        if hasattr(self, "passing"):
            roi, state = self.passing(roi, state)
        return EncoderState(video, motion, roi, state)


class TAEncoder(Module):
    def __init__(self, cfg: RunConfig, rng):
        m, i = cfg.model, cfg.ism
        if m.embed_dim != m.t_in * m.c_hid:
            raise ConfigError("model.embed_dim", f"width {m.embed_dim} != t_in*c_hid = {m.t_in * m.c_hid}")
        self.cfg = cfg
        h, w = m.height // 4, m.width // 4
        if m.video_branch and m.pos_embed:
            self.pos = Parameter((0.02 * rng.standard_normal((1, h * w, m.embed_dim))).astype(get_dtype()))
        if i.enabled:
            self.roi_init = (RoiTokenInit(m.embed_dim, i.M, rng) if i.init_roi == "roi"
                             else RandomTokens(m.embed_dim, i.M, rng))
            self.state_init = (StateTokenInit(m.t_in, m.embed_dim, i.N, rng) if i.init_state == "states"
                               else RandomTokens(m.embed_dim, i.N, rng))
        self.layers = [EncoderLayer(cfg, rng) for _ in range(m.depth)]

    def init_messengers(self, z: Tensor | None, boxes_px: np.ndarray, boxes_norm: Tensor):
        if not self.cfg.ism.enabled:
            return None, None
        B = boxes_norm.shape[0]
        if isinstance(self.roi_init, RoiTokenInit):
            roi = self.roi_init(z, boxes_px)
        else:
            roi = self.roi_init(B)
        if isinstance(self.state_init, StateTokenInit):
            state = self.state_init(boxes_norm)
        else:
            state = self.state_init(B)
        return roi, state

    def initial_state(self, z, s0, boxes_px, boxes_norm) -> EncoderState:
        video = None
        if z is not None and self.cfg.model.video_branch:
            video = fold(z)
            if hasattr(self, "pos"):
                video = video + self.pos
        roi, state = self.init_messengers(z, boxes_px, boxes_norm)
        return EncoderState(video, s0 if self.cfg.model.motion_branch else None, roi, state)

    def forward(self, z: Tensor | None, s0: Tensor | None, boxes_px: np.ndarray, boxes_norm: Tensor):
        """Z [B,T,C_hid,h,w], S0 [B,T,C'] -> (F~ [B,T,C_hid,h,w] or None, S^L [B,T,C'] or None)."""
        st = self.initial_state(z, s0, boxes_px, boxes_norm)
        for layer in self.layers:
            st = layer(st)
        video = None
        if st.video is not None:
            m = self.cfg.model
            video = unfold(st.video, m.t_in, m.height // 4, m.width // 4)
        return video, st.motion
