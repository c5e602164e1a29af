"""Structured run configuration with YAML load/save.

One document groups the simulation constants, the ranging model, the
reward weights, SAC training settings, and the benchmark sweep. The
committed configs/ files carry every default; code never reads YAML
implicitly, a config object is always passed in.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .bench import INIT_CM, LINE_LENGTH, MODES, SQUARE_SIDE, TAG_SPEED
from .control.sac import SpawnConfig, TrainConfig
from .geometry import layout_by_name
from .loss import (DR, DTHETA_DEG, R_IN, R_OUT, LossConfig, default_extrema,
                   find_loss_extrema)
from .sensing import RangingModel
from .sim import H_HISTORY, T_S, EPISODE_SECONDS, LocalizationEnv, RewardParams


@dataclass(frozen=True)
class SimSettings:
    layout: str = "is"
    alpha: float = 10.0          # short-range term weight in the loss
    t_s: float = T_S
    history: int = H_HISTORY
    episode_seconds: float = EPISODE_SECONDS
    r_in: float = R_IN           # loss normalization domain
    r_out: float = R_OUT
    dr: float = DR
    dtheta_deg: float = DTHETA_DEG


@dataclass(frozen=True)
class BenchSettings:
    methods: tuple = ("SUL-EQ", "SUL-IS")
    init_cms: tuple = INIT_CM
    modes: tuple = MODES
    n_runs: int = 1000
    tag_speed: float = TAG_SPEED
    line_length: float = LINE_LENGTH
    square_side: float = SQUARE_SIDE


@dataclass(frozen=True)
class AppConfig:
    sim: SimSettings = field(default_factory=SimSettings)
    model: RangingModel = field(default_factory=RangingModel)
    reward: RewardParams = field(default_factory=RewardParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    bench: BenchSettings = field(default_factory=BenchSettings)


def config_to_dict(cfg: AppConfig) -> dict:
    d = asdict(cfg)
    for key in ("methods", "init_cms", "modes"):
        d["bench"][key] = list(d["bench"][key])
    d["train"]["hidden"] = list(d["train"]["hidden"])
    return d


def config_from_dict(d: dict) -> AppConfig:
    d = dict(d)
    train_d = dict(d.get("train", {}))
    spawn = SpawnConfig(**train_d.pop("spawn", {}))
    if "hidden" in train_d:
        train_d["hidden"] = tuple(train_d["hidden"])
    bench_d = dict(d.get("bench", {}))
    for key in ("methods", "init_cms", "modes"):
        if key in bench_d:
            bench_d[key] = tuple(bench_d[key])
    return AppConfig(
        sim=SimSettings(**d.get("sim", {})),
        model=RangingModel(**d.get("model", {})),
        reward=RewardParams(**d.get("reward", {})),
        train=TrainConfig(**train_d, spawn=spawn),
        bench=BenchSettings(**bench_d),
    )


def load_config(path) -> AppConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh) or {})


def save_config(cfg: AppConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)


def loss_setup(cfg: AppConfig):
    """(layout, loss config, extrema) for a run; cached on the default domain."""
    layout = layout_by_name(cfg.sim.layout)
    loss_cfg = LossConfig(layout, cfg.model, alpha=cfg.sim.alpha)
    domain = (cfg.sim.r_in, cfg.sim.r_out, cfg.sim.dr, cfg.sim.dtheta_deg)
    if domain == (R_IN, R_OUT, DR, DTHETA_DEG):
        extrema = default_extrema(loss_cfg)
    else:
        extrema = find_loss_extrema(loss_cfg, *domain)
    return layout, loss_cfg, extrema


def env_factory(cfg: AppConfig):
    """Closure building identical environments; extrema computed once."""
    layout, loss_cfg, extrema = loss_setup(cfg)
    max_steps = int(np.ceil(cfg.sim.episode_seconds / cfg.sim.t_s))

    def make() -> LocalizationEnv:
        return LocalizationEnv(layout, cfg.model, loss_cfg, extrema,
                               params=cfg.reward, t_s=cfg.sim.t_s,
                               h=cfg.sim.history, max_steps=max_steps)
    return make


def build_env(cfg: AppConfig) -> LocalizationEnv:
    return env_factory(cfg)()
