"""Deployable policies: static, geometric heuristic, and trained actor.

All policies expose act(obs) -> [v, omega] within saturation bounds, plus
an optional reset() hook the episode engine calls at episode start.

Actor checkpoints are a small self-describing binary: magic ``UWBP``,
one version byte, a uint32 little-endian header length, a JSON header
(layer widths, output transform, action scale, history length), then the
raw float64 C-order bytes of every layer's W and b in order. Save/load
round-trips are bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ShapeMismatch
from ..estimation import trilaterate, trilaterate_batch
from ..geometry import AnchorLayout
from ..sim import V_MAX, OMEGA_MAX, clip_command, wrap_angle
from .mlp import Mlp

MAGIC = b"UWBP"
VERSION = 1


class StaticPolicy:
    """Keeps the robot still; the passive baseline."""

    deterministic = True

    def act(self, obs) -> np.ndarray:
        return np.zeros(2)

    def act_batch(self, obs) -> np.ndarray:
        return np.zeros((np.asarray(obs).shape[0], 2))


class GeometricPolicy:
    """Model-based tracker: steer the estimated tag toward a goal point.

    Runs its own NLLS tracker on the newest range triple (warm-started on
    the previous estimate) and applies a proportional law on bearing and
    range errors relative to the goal. A diagnostic reference controller,
    not a learned one.
    """

    deterministic = True

    def __init__(self, layout: AnchorLayout, goal, sigma_guard: float | None = None,
                 k_theta: float = 2.0, k_v: float = 1.0):
        self.layout = layout
        self.goal = np.asarray(goal, dtype=float)
        self.sigma_guard = sigma_guard
        self.k_theta = k_theta
        self.k_v = k_v
        self.reset()

    def reset(self) -> None:
        self._est = self.goal.copy()

    def act(self, obs) -> np.ndarray:
        d = np.asarray(obs, dtype=float)[:3]          # newest triple
        est = trilaterate(d, self.layout, self._est, sigma_guard=self.sigma_guard)
        self._est = est.position
        p = est.position
        bearing_err = wrap_angle(np.arctan2(p[1], p[0])
                                 - np.arctan2(self.goal[1], self.goal[0]))
        range_err = np.hypot(p[0], p[1]) - np.hypot(self.goal[0], self.goal[1])
        return clip_command([self.k_v * range_err, self.k_theta * bearing_err])

    def reset_batch(self, n: int) -> None:
        self._est_b = np.tile(self.goal, (n, 1))

    def act_batch(self, obs) -> np.ndarray:
        """Lane-per-realization variant; tracks one estimate per lane."""
        d = np.asarray(obs, dtype=float)[:, :3]
        pos, _res, _its, _conv = trilaterate_batch(
            d, self.layout, self._est_b, sigma_guard=self.sigma_guard)
        self._est_b = pos
        bearing_err = wrap_angle(np.arctan2(pos[:, 1], pos[:, 0])
                                 - np.arctan2(self.goal[1], self.goal[0]))
        range_err = (np.hypot(pos[:, 0], pos[:, 1])
                     - np.hypot(self.goal[0], self.goal[1]))
        u = np.stack([self.k_v * range_err, self.k_theta * bearing_err], axis=1)
        return np.clip(u, [-V_MAX, -OMEGA_MAX], [V_MAX, OMEGA_MAX])


class ActorPolicy:
    """Deterministic deployment head of a trained actor network.

    The network maps the range-history observation to [mean, log_std] of
    a 2-D Gaussian; deployment uses tanh(mean) scaled per dimension. The
    act path sees ranges only; no ground-truth state enters here.
    """

    deterministic = True

    def __init__(self, net: Mlp, scale=(V_MAX, OMEGA_MAX), history: int = 10):
        if net.widths[-1] % 2 != 0:
            raise ShapeMismatch("actor head must output mean and log-std pairs")
        self.net = net
        self.scale = np.asarray(scale, dtype=float)
        self.history = int(history)

    @property
    def act_dim(self) -> int:
        return self.net.widths[-1] // 2

    def act(self, obs) -> np.ndarray:
        out = self.net.forward(obs)
        mean = out[: self.act_dim]
        return np.tanh(mean) * self.scale

    def act_batch(self, obs) -> np.ndarray:
        out = self.net.forward(np.asarray(obs, dtype=float))
        mean = out[:, : self.act_dim]
        return np.tanh(mean) * self.scale


def save_policy(policy: ActorPolicy, path) -> None:
    header = {
        "widths": policy.net.widths,
        "out_transform": policy.net.out_transform,
        "scale": [float(s) for s in policy.scale],
        "history": policy.history,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        for p in policy.net.parameters():
            fh.write(np.ascontiguousarray(p, dtype=np.float64).tobytes())


def load_policy(path) -> ActorPolicy:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"not a policy checkpoint (magic {magic!r})")
        version = fh.read(1)[0]
        if version != VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        hlen = int(np.frombuffer(fh.read(4), dtype=np.uint32)[0])
        header = json.loads(fh.read(hlen).decode("utf-8"))
        net = Mlp(header["widths"], out_transform=header["out_transform"],
                  rng=np.random.default_rng(0))
        params = []
        for fan_in, fan_out in zip(net.widths[:-1], net.widths[1:]):
            w = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype=np.float64)
            params.append(w.reshape(fan_in, fan_out).copy())
            b = np.frombuffer(fh.read(8 * fan_out), dtype=np.float64)
            params.append(b.copy())
        tail = fh.read(1)
        if tail:
            raise ValueError("trailing bytes after checkpoint parameters")
    net.set_parameters(params)
    return ActorPolicy(net, scale=header["scale"], history=header["history"])
