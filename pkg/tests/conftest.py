"""Shared fixtures. The trained-policy fixture caches its checkpoint under
tests/_artifacts keyed by config hash and seed, so repeated test runs skip
the (several minute) training."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from uwb_active_loc.config import AppConfig, config_to_dict, env_factory, load_config, loss_setup
from uwb_active_loc.control import load_policy, save_policy, train

ROOT = Path(__file__).resolve().parent.parent
ARTIFACTS = Path(__file__).resolve().parent / "_artifacts"
DESK_SEED = 0


@pytest.fixture(scope="session")
def desk_cfg() -> AppConfig:
    return load_config(ROOT / "configs" / "desk.yaml")


def train_cache_key(cfg: AppConfig, seed: int) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True) + f"|seed={seed}"
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def train_or_load(cfg: AppConfig, seed: int):
    """Train the policy for (cfg, seed), or load the cached artifacts."""
    ARTIFACTS.mkdir(exist_ok=True)
    key = train_cache_key(cfg, seed)
    ckpt = ARTIFACTS / f"policy_{key}.ckpt"
    curve_file = ARTIFACTS / f"curve_{key}.npz"
    if ckpt.exists() and curve_file.exists():
        with np.load(curve_file) as z:
            curve = {k: list(z[k]) for k in z.files}
        return load_policy(ckpt), curve
    policy, curve = train(env_factory(cfg), cfg.train, np.random.default_rng(seed))
    save_policy(policy, ckpt)
    np.savez(curve_file, **{k: np.asarray(v) for k, v in curve.items()})
    return policy, curve


@pytest.fixture(scope="session")
def trained(desk_cfg):
    """(policy, learning curve) for the desk-scale training run."""
    return train_or_load(desk_cfg, DESK_SEED)


@pytest.fixture(scope="session")
def iso_setup():
    """(layout, loss config, extrema) for the isosceles arrangement."""
    return loss_setup(AppConfig())


@pytest.fixture(scope="session")
def eq_setup():
    import dataclasses
    cfg = AppConfig()
    cfg = dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim, layout="eq"))
    return loss_setup(cfg)
