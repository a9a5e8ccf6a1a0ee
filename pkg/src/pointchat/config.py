"""Engine and service configuration.

One config file (JSON) with env-var overrides; every tunable named in the
module contracts lives here so tests can pin them explicitly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

ENV_PREFIX = "POINTCHAT_"


@dataclass
class EngineConfig:
    artifact_root: str = "pointchat_data"
    # pointing
    click_extent: float = 0.01        # max pairwise displacement, normalized coords
    click_max_ms: float = 500.0
    auto_drag: bool = True            # infer Drag when the trace starts inside the active mask
    # perception
    segment_tolerance: float = 32.0   # per-channel scale 0-255, Euclidean over RGB
    stroke_seed_stride: int = 4       # every Nth path point seeds a flood fill
    draw_color: tuple[int, int, int] = (0, 0, 0)
    draw_width: float = 3.0
    # controller
    clarify_threshold: float = 3.0    # minimum select_tool score before asking back
    llm_backend: str = "null"         # null | scripted:<path> | http:<url>
    llm_timeout_s: float = 30.0
    # toolkit
    highlight_half_window_s: float = 2.0
    external_timeout_s: float = 60.0
    external_payload: str = "base64"  # base64 | url
    external_tools: list[str] = field(default_factory=list)  # endpoint URLs to register at startup
    public_base_url: str = ""         # prefix for url-mode artifact payloads; unset disables url mode


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8787"
    cors_origins: list[str] = field(default_factory=list)
    ui_root: str = ""                  # directory with a built browser client; served at /ui
    engine: EngineConfig = field(default_factory=EngineConfig)


def _coerce(value: str, target: Any) -> Any:
    if isinstance(target, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(target, int):
        return int(value)
    if isinstance(target, float):
        return float(value)
    if isinstance(target, (list, tuple)):
        return json.loads(value)
    return value


def _apply_env(cfg: Any, prefix: str = ENV_PREFIX) -> None:
    for f in fields(cfg):
        current = getattr(cfg, f.name)
        if hasattr(current, "__dataclass_fields__"):
            _apply_env(current, prefix)
            continue
        raw = os.environ.get(prefix + f.name.upper())
        if raw is not None:
            setattr(cfg, f.name, _coerce(raw, current))


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Build the config from defaults, then file, then environment."""
    cfg = ServiceConfig()
    if path is not None:
        data = json.loads(Path(path).read_text())
        engine_data = data.pop("engine", {})
        for key, value in data.items():
            if hasattr(cfg, key):
                setattr(cfg, key, value)
        for key, value in engine_data.items():
            if hasattr(cfg.engine, key):
                setattr(cfg.engine, key, value)
    _apply_env(cfg)
    return cfg
