"""
Flat ``key = value`` run configuration.

Keys carry a module prefix::

    # comment
    planner.writhe_gate = 0.05
    map.window_px = 128, 128
    grasp.open_width_px = 60
    scene.placement = twisted_plus_free

Run ``tanglemap config`` to list every key with its default.  Unknown keys
are rejected.
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

from .edges import EdgeConfig
from .entanglement import MapConfig, MapWeights
from .errors import ConfigError
from .graspability import GraspConfig, HandGeometry
from .planner import PlannerConfig
from .scenegen import PLACEMENTS, PATTERNS


@dataclass(frozen=True)
class SceneConfig:
    placement: str = "twisted_plus_free"
    patterns: Tuple[str, ...] = ("C", "S", "mixed")
    n_parts: int = 3
    noise_sigma: float = 1.0
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"scene.placement must be one of {PLACEMENTS}")
        bad = [p for p in self.patterns if p not in PATTERNS]
        if bad:
            raise ConfigError(f"unknown scene pattern(s) {bad}; known: {sorted(PATTERNS)}")


@dataclass(frozen=True)
class RunConfig:
    planner: PlannerConfig = PlannerConfig()
    scene: SceneConfig = SceneConfig()
    seed: int = 0
    focal: float = 1000.0  # px; centered pinhole camera for generated and loaded images


# prefix -> attribute path inside RunConfig
_SECTIONS = {
    "planner": ("planner",),
    "map": ("planner", "map"),
    "weights": ("planner", "map", "weights"),
    "edges": ("planner", "map", "edges"),
    "grasp": ("planner", "grasp"),
    "hand": ("planner", "grasp", "hand"),
    "scene": ("scene",),
    "run": (),
}
_NESTED = (PlannerConfig, MapConfig, MapWeights, EdgeConfig, GraspConfig, HandGeometry,
           SceneConfig, RunConfig)


def _get(obj, path):
    for name in path:
        obj = getattr(obj, name)
    return obj


def _set(obj, path, changes):
    if not path:
        return replace(obj, **changes)
    child = getattr(obj, path[0])
    return replace(obj, **{path[0]: _set(child, path[1:], changes)})


def _hints(cls) -> Dict[str, object]:
    return typing.get_type_hints(cls)


def known_keys() -> Dict[str, object]:
    """Every accepted key with its type annotation."""
    keys = {}
    default = RunConfig()
    for prefix, path in _SECTIONS.items():
        obj = _get(default, path)
        hints = _hints(type(obj))
        for f in dataclasses.fields(obj):
            if isinstance(getattr(obj, f.name), _NESTED):
                continue
            keys[f"{prefix}.{f.name}"] = hints[f.name]
    return keys


def defaults() -> Dict[str, object]:
    default = RunConfig()
    out = {}
    for key in known_keys():
        prefix, name = key.split(".", 1)
        out[key] = getattr(_get(default, _SECTIONS[prefix]), name)
    return out


def _convert(text: str, tp, key: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union and type(None) in args:
        if text.lower() in ("none", "null", ""):
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _convert(text, inner, key)
    if origin in (tuple, Tuple):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(p, args[0], key) for p in parts)
        if len(parts) != len(args):
            raise ConfigError(f"{key}: expected {len(args)} comma-separated values, got {text!r}")
        return tuple(_convert(p, a, key) for p, a in zip(parts, args))
    try:
        if tp is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if tp is int:
            return int(text)
        if tp is float:
            return float(text)
        if tp is str:
            return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {tp.__name__}") from None
    raise ConfigError(f"{key}: unsupported type {tp}")


def parse_config_text(text: str, base: RunConfig = RunConfig(), source: str = "<config>") -> RunConfig:
    keys = known_keys()
    updates: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in keys:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} "
                              f"(run 'tanglemap config' for the list)")
        updates[key] = _convert(value, keys[key], f"{source}:{lineno}: {key}")
    return apply(base, updates, source)


def apply(cfg: RunConfig, updates: Dict[str, object], where: str = "<config>") -> RunConfig:
    """Set several prefixed keys at once; keys of one section are applied together."""
    by_section: Dict[str, Dict[str, object]] = {}
    keys = known_keys()
    for key, value in updates.items():
        if key not in keys:
            raise ConfigError(f"{where}: unknown key {key!r}")
        prefix, name = key.split(".", 1)
        by_section.setdefault(prefix, {})[name] = value
    for prefix, changes in by_section.items():
        try:
            cfg = _set(cfg, _SECTIONS[prefix], changes)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where}: {prefix}: {exc}") from None
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, source=str(p))


def format_defaults() -> str:
    lines = []
    for key, value in defaults().items():
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
