"""Run configuration: nested dataclasses serialised as flat ``section.key = value`` text.

Defaults reproduce the published training setup (256x256 frames, 8->8, encoder
width 512, depth 6, 8 ROI / 2 state messengers, Adam lr 1e-3 with OneCycle,
batch 4, 50 epochs, loss weights 1e-3, Gaussian sigma 50).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    """Invalid configuration. ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ModelConfig:
    channels: int = 3
    height: int = 256
    width: int = 256
    t_in: int = 8
    t_out: int = 8
    c_hid: int = 64
    embed_dim: int = 512
    c_dec: int = 64
    depth: int = 6
    heads: int = 8
    dec_heads: int = 8
    dec_layers: int = 4
    mlp_ratio: int = 4
    se_reduction: int = 4
    pos_embed: bool = True
    # ablation switches
    video_branch: bool = True
    motion_branch: bool = True
    sta: bool = True


@dataclass
class IsmConfig:
    enabled: bool = True
    init_roi: str = "roi"
    init_state: str = "states"
    collect_enabled: bool = field(default=True, metadata={"key": "collect.enabled"})
    pass_enabled: bool = field(default=True, metadata={"key": "pass.enabled"})
    M: int = 8
    N: int = 2


@dataclass
class LossConfig:
    lambda1: float = 0.001
    lambda2: float = 0.001
    sigma_x: float = 50.0
    sigma_y: float = 50.0
    tsgl: bool = True


@dataclass
class OptimConfig:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    div_factor: float = 25.0
    final_div_factor: float = 1e4
    pct_start: float = 0.3
    grad_clip: float = 0.0


@dataclass
class DataConfig:
    root: str = "data/synthetic"
    stride: int = 6
    splits: str = "0.7,0.2,0.1"
    split_seed: int = 0
    n_sequences: int = 8
    seq_len: int = 16
    seed: int = 7


@dataclass
class TrainConfig:
    batch_size: int = 4
    epochs: int = 50
    max_steps: int = 0
    seed: int = 0
    dtype: str = "float32"
    ckpt_every: int = 100
    name: str = "run"
    out_dir: str = ""


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    ism: IsmConfig = field(default_factory=IsmConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    data: DataConfig = field(default_factory=DataConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> "RunConfig":
        m, i = self.model, self.ism
        if m.t_in * m.c_hid != m.embed_dim:
            raise ConfigError("model.embed_dim", f"must equal t_in*c_hid = {m.t_in * m.c_hid}, got {m.embed_dim}")
        if m.height % 4 or m.width % 4:
            raise ConfigError("model.height", f"frame size {m.height}x{m.width} must be divisible by 4")
        if m.embed_dim % m.heads:
            raise ConfigError("model.heads", f"{m.heads} heads do not divide width {m.embed_dim}")
        if m.c_dec % m.dec_heads:
            raise ConfigError("model.dec_heads", f"{m.dec_heads} heads do not divide decoder width {m.c_dec}")
        if m.embed_dim % m.se_reduction:
            raise ConfigError("model.se_reduction", f"must divide width {m.embed_dim}")
        for key, val in (("model.depth", m.depth), ("model.t_in", m.t_in), ("model.t_out", m.t_out),
                         ("model.c_hid", m.c_hid), ("model.c_dec", m.c_dec), ("model.dec_layers", m.dec_layers),
                         ("model.channels", m.channels)):
            if val < 1:
                raise ConfigError(key, f"must be >= 1, got {val}")
        if not (m.video_branch or m.motion_branch):
            raise ConfigError("model.video_branch", "at least one of video_branch / motion_branch must be on")
        if i.enabled:
            if not (m.video_branch and m.motion_branch):
                raise ConfigError("ism.enabled", "messengers need both the video and the motion branch")
            if i.M < 1 or i.N < 1:
                raise ConfigError("ism.M", f"messenger counts must be >= 1 when ISM is enabled (M={i.M}, N={i.N})")
            if i.init_roi not in ("random", "roi"):
                raise ConfigError("ism.init_roi", f"expected random|roi, got {i.init_roi!r}")
            if i.init_state not in ("random", "states"):
                raise ConfigError("ism.init_state", f"expected random|states, got {i.init_state!r}")
        for key, val in (("loss.lambda1", self.loss.lambda1), ("loss.lambda2", self.loss.lambda2)):
            if val < 0:
                raise ConfigError(key, "loss weights must be non-negative")
        if self.loss.sigma_x <= 0 or self.loss.sigma_y <= 0:
            raise ConfigError("loss.sigma_x", "Gaussian widths must be positive")
        if self.train.batch_size < 1:
            raise ConfigError("train.batch_size", "must be >= 1")
        if self.train.dtype not in ("float32", "float64"):
            raise ConfigError("train.dtype", f"expected float32|float64, got {self.train.dtype!r}")
        if not 0.0 < self.optim.pct_start < 1.0:
            raise ConfigError("optim.pct_start", "must lie in (0, 1)")
        try:
            fracs = split_fractions(self.data.splits)
        except ValueError as exc:
            raise ConfigError("data.splits", str(exc)) from None
        if len(fracs) != 3:
            raise ConfigError("data.splits", "expected three fractions train,val,test")
        if self.data.stride < 1:
            raise ConfigError("data.stride", "must be >= 1")
        return self

    @property
    def window(self) -> int:
        return self.model.t_in + self.model.t_out


def split_fractions(text: str) -> list:
    parts = [float(p) for p in text.split(",")]
    if any(p < 0 for p in parts) or sum(parts) <= 0:
        raise ValueError(f"bad split fractions {text!r}")
    return parts


def _key(f) -> str:
    return f.metadata.get("key", f.name)


def iter_items(cfg: RunConfig):
    for sec in fields(cfg):
        section = getattr(cfg, sec.name)
        for f in fields(section):
            yield f"{sec.name}.{_key(f)}", section, f


def _parse_value(text: str, current, key: str):
    if isinstance(current, bool):
        low = text.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(key, f"expected a boolean, got {text!r}")
    try:
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
    except ValueError:
        raise ConfigError(key, f"expected {type(current).__name__}, got {text!r}") from None
    return text


def apply_overrides(cfg: RunConfig, pairs: dict) -> RunConfig:
    index = {key: (section, f) for key, section, f in iter_items(cfg)}
    for key, raw in pairs.items():
        if key not in index:
            raise ConfigError(key, "unknown configuration key")
        section, f = index[key]
        value = raw if not isinstance(raw, str) else _parse_value(raw.strip(), getattr(section, f.name), key)
        setattr(section, f.name, value)
    return cfg


def parse_text(text: str, base: RunConfig | None = None) -> RunConfig:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs[key] = value
    cfg = base if base is not None else RunConfig()
    return apply_overrides(cfg, pairs)


def load(path) -> RunConfig:
    return parse_text(Path(path).read_text()).validate()


def dumps(cfg: RunConfig) -> str:
    lines, current = [], None
    for key, section, f in iter_items(cfg):
        sec = key.split(".", 1)[0]
        if sec != current:
            if current is not None:
                lines.append("")
            lines.append(f"# {sec}")
            current = sec
        value = getattr(section, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def save(cfg: RunConfig, path) -> None:
    Path(path).write_text(dumps(cfg))


def copy(cfg: RunConfig) -> RunConfig:
    return dataclasses.replace(cfg, **{f.name: dataclasses.replace(getattr(cfg, f.name)) for f in fields(cfg)})


def desk_config(**overrides) -> RunConfig:
    """Small configuration used for CPU verification runs: 32x32 grey frames, 4->4,
    width 32, two layers, four heads, 4 ROI / 1 state messengers, batch 4."""
    cfg = RunConfig()
    apply_overrides(cfg, {
        "model.channels": 1, "model.height": 32, "model.width": 32,
        "model.t_in": 4, "model.t_out": 4, "model.c_hid": 8, "model.embed_dim": 32,
        "model.c_dec": 16, "model.depth": 2, "model.heads": 4, "model.dec_heads": 4,
        "ism.M": 4, "ism.N": 1, "data.seq_len": 8, "data.n_sequences": 8,
        "data.splits": "1,0,0",
    })
    apply_overrides(cfg, overrides)
    return cfg
