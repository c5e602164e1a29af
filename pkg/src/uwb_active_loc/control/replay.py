"""Fixed-capacity FIFO replay buffer with uniform sampling."""

from __future__ import annotations

import numpy as np


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, cobs_dim: int, act_dim: int):
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.cobs = np.zeros((capacity, cobs_dim), dtype=np.float32)
        self.act = np.zeros((capacity, act_dim), dtype=np.float32)
        self.rew = np.zeros(capacity, dtype=np.float32)
        self.obs2 = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.cobs2 = np.zeros((capacity, cobs_dim), dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.ptr = 0
        self.size = 0

    def add(self, obs, cobs, act, rew, obs2, cobs2, done) -> None:
        i = self.ptr
        self.obs[i] = obs
        self.cobs[i] = cobs
        self.act[i] = act
        self.rew[i] = rew
        self.obs2[i] = obs2
        self.cobs2[i] = cobs2
        self.done[i] = float(done)
        self.ptr = (i + 1) % self.capacity       # oldest entry overwritten first
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        idx = rng.integers(0, self.size, size=batch_size)
        return {
            "obs": self.obs[idx].astype(np.float64),
            "cobs": self.cobs[idx].astype(np.float64),
            "act": self.act[idx].astype(np.float64),
            "rew": self.rew[idx].astype(np.float64),
            "obs2": self.obs2[idx].astype(np.float64),
            "cobs2": self.cobs2[idx].astype(np.float64),
            "done": self.done[idx].astype(np.float64),
        }
