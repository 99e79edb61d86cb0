"""Named flag combinations for the module, messenger-source, messenger-count
and ISM-phase ablations. Each row is a set of config overrides applied on top
of a base configuration (the full model)."""

from __future__ import annotations

from . import config as cfgmod

# every target-aware component off: plain transformer encoder, frames only
VIDEO_ONLY = {
    "model.video_branch": True, "model.motion_branch": False, "model.sta": False,
    "ism.enabled": False, "loss.tsgl": False,
}

MODULES = {
    "vp": VIDEO_ONLY,
    "mp": {**VIDEO_ONLY, "model.video_branch": False, "model.motion_branch": True},
    "vp+sta": {**VIDEO_ONLY, "model.sta": True},
    "vp+mp+sta": {**VIDEO_ONLY, "model.motion_branch": True, "model.sta": True},
    "vp+mp+sta+ism": {"loss.tsgl": False},
    "full": {},
}

INIT_SOURCES = {
    f"{r}/{s}": {"ism.init_roi": r, "ism.init_state": s}
    for r in ("random", "roi") for s in ("random", "states")
}

COUNTS = {f"{m}/{n}": {"ism.M": m, "ism.N": n}
          for m, n in ((2, 2), (4, 4), (8, 8), (4, 2), (8, 4), (16, 8), (4, 1), (8, 2), (16, 4))}

PHASES = {
    "none": {"ism.enabled": False},
    "collect+pass": {"ism.init_roi": "random", "ism.init_state": "random"},
    "init+pass": {"ism.collect.enabled": False},
    "init+collect": {"ism.pass.enabled": False},
    "init+collect+pass": {},
}

TABLES = {"modules": MODULES, "init": INIT_SOURCES, "counts": COUNTS, "phases": PHASES}


def preset(name: str) -> dict:
    """``table:row`` -> overrides, e.g. ``modules:vp`` or ``counts:8/2``."""
    table, _, row = name.partition(":")
    try:
        return dict(TABLES[table][row])
    except KeyError:
        raise cfgmod.ConfigError("preset", f"unknown ablation preset {name!r}; "
                                 f"known: {', '.join(preset_names())}") from None


def preset_names() -> list:
    return [f"{t}:{r}" for t, rows in TABLES.items() for r in rows]


def apply_preset(cfg: cfgmod.RunConfig, name: str) -> cfgmod.RunConfig:
    return cfgmod.apply_overrides(cfg, preset(name))
