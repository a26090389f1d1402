"""Run configuration loaded from YAML."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from roi_nbv.evaluation import PLANNERS
from roi_nbv.global_planner import PlannerConfig
from roi_nbv.mts import MtsConfig
from roi_nbv.scene_sim import SCENARIOS, SceneConfig
from roi_nbv.voxel_map import MapConfig

OUT_DIR_ENV = "ROIVP_OUT_DIR"

_SECTIONS = {"map": MapConfig, "mts": MtsConfig, "planner": PlannerConfig, "scene": SceneConfig}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: int = 3
    planners: list = field(default_factory=lambda: list(PLANNERS))
    trials: int = 20
    seed_base: int = 0
    scene_seed: int = 0
    budget: float = 6.0
    max_steps: int = 400
    output_dir: str | None = None
    map: dict = field(default_factory=dict)
    mts: dict = field(default_factory=dict)
    planner: dict = field(default_factory=dict)
    scene: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown id {self.scenario!r}; valid ids are 1, 2, 3")
        if self.trials < 1:
            raise ConfigError("trials: must be at least 1")
        if not self.planners:
            raise ConfigError("planners: list must not be empty")
        for p in self.planners:
            if p not in PLANNERS:
                raise ConfigError(f"planners: unknown planner {p!r}; expected one of {', '.join(PLANNERS)}")
        if self.budget < 0:
            raise ConfigError("budget: must be non-negative")
        for name, cls in _SECTIONS.items():
            allowed = {f.name for f in fields(cls)}
            for key in getattr(self, name):
                if key not in allowed:
                    raise ConfigError(f"unknown key '{name}.{key}'")
        try:
            self.map_config()
            self.mts_config()
            self.planner_config()
            self.scene_config()
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None

    def map_config(self) -> MapConfig:
        return MapConfig(**self.map)

    def mts_config(self) -> MtsConfig:
        return MtsConfig(**self.mts)

    def planner_config(self) -> PlannerConfig:
        return PlannerConfig(**self.planner)

    def scene_config(self) -> SceneConfig:
        return SceneConfig(**{"scenario": self.scenario, "seed": self.scene_seed, **self.scene})

    def out_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUT_DIR_ENV) or "out")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        allowed = {f.name for f in fields(cls)}
        for key in data:
            if key not in allowed:
                raise ConfigError(f"unknown key '{key}'")
        for name in _SECTIONS:
            if name in data and not isinstance(data[name] or {}, dict):
                raise ConfigError(f"{name}: expected a mapping")
        data = {k: (v or {}) if k in _SECTIONS else v for k, v in data.items()}
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML: {e}") from None
        return cls.from_dict(data)
