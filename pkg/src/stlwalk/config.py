"""Harness configuration: defaults plus a single JSON override file.

Keys mirror the module structure: model, gait, riemannian, treadmill,
mpc, collision, sweep.  All units SI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .collision import DEFAULT_RANGES, LegGeometry
from .locomotion_spec import FootBound, GaitParams, calibrate_region
from .planner import SolverConfig
from .reduced_model import ModelParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RiemannianConfig:
    margin_frac: float = 0.5
    floor: float = 0.05


@dataclass(frozen=True)
class CollisionConfig:
    geometry: LegGeometry = field(default_factory=LegGeometry)
    n_samples: int = 50000
    layers: tuple = (32, 32)
    epochs: int = 200
    seed: int = 0
    lr: float = 0.2
    momentum: float = 0.9
    batch_size: int = 128
    ranges: dict = field(default_factory=lambda: dict(DEFAULT_RANGES))
    model_path: str | None = None


@dataclass(frozen=True)
class SweepConfig:
    n_directions: int = 12
    phases: tuple = (0.25, 0.5, 0.75)
    force_cap: float = 600.0     # [N]
    resolution: float = 5.0      # bisection stop width [N]
    push_duration: float = 0.1   # [s]
    n_steps: int = 7             # episode length in walking steps
    control_period: float = 1.0 / 30.0
    require_collision_free: bool = True
    seed: int = 0


@dataclass(frozen=True)
class Config:
    model: ModelParams = field(default_factory=ModelParams)
    gait: GaitParams = field(default_factory=GaitParams)
    riemannian: RiemannianConfig = field(default_factory=RiemannianConfig)
    treadmill: FootBound = field(default_factory=FootBound)
    mpc: SolverConfig = field(default_factory=SolverConfig)
    collision: CollisionConfig = field(default_factory=CollisionConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def region(self):
        return calibrate_region(self.gait, self.model,
                                self.riemannian.margin_frac,
                                self.riemannian.floor)


_SECTION_TYPES = {
    "model": ModelParams,
    "gait": GaitParams,
    "riemannian": RiemannianConfig,
    "treadmill": FootBound,
    "mpc": SolverConfig,
    "sweep": SweepConfig,
}


def _build(cls, current, overrides, section):
    if not isinstance(overrides, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    kwargs = {f: getattr(current, f) for f in current.__dataclass_fields__}
    for key, value in overrides.items():
        if key not in kwargs:
            raise ConfigError(f"unknown key {section}.{key}")
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad config section {section!r}: {e}") from e


def load_config(path=None) -> Config:
    cfg = Config()
    if path is None:
        return cfg
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    sections = {}
    for key, value in data.items():
        if key == "collision":
            cur = cfg.collision
            geom = cur.geometry
            if "geometry" in value:
                geom = _build(LegGeometry, geom, value.pop("geometry"),
                              "collision.geometry")
            col = _build(CollisionConfig, cur, value, "collision")
            sections["collision"] = CollisionConfig(
                **{**{f: getattr(col, f) for f in col.__dataclass_fields__},
                   "geometry": geom})
        elif key in _SECTION_TYPES:
            sections[key] = _build(_SECTION_TYPES[key], getattr(cfg, key),
                                   value, key)
        else:
            raise ConfigError(f"unknown config section {key!r}")
    return Config(**{**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__},
                     **sections})
