"""Episode engine: unicycle robot, scripted tag paths, ranging, reward.

World frame: the robot spawns at the origin with heading 0; the tag path
is scripted in world coordinates. All learning-facing quantities (ranges,
reward, relative position) are computed in the robot body frame.

Commands are plain arrays [v, omega] (m/s, rad/s). Rewards are evaluated
on the relative tag position *after* the command is applied, collision
branch first; an episode terminates on collision or at the step cap.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrace
from .estimation import trilaterate
from .geometry import AnchorLayout, gdop_grid
from .loss import LossConfig, LossExtrema, scaled_loss
from .sensing import RangingModel, measure_ranges

V_MAX = 0.5       # m/s
OMEGA_MAX = 1.5   # rad/s
T_S = 0.1         # s, control period
H_HISTORY = 10    # range triples per observation
EPISODE_SECONDS = 30.0
HOLD_SECONDS = 10.0


def wrap_angle(theta):
    """Wrap to (-pi, pi]."""
    return np.mod(theta - np.pi, -2.0 * np.pi) + np.pi


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float   # radians, wrapped to (-pi, pi]


@dataclass(frozen=True)
class RewardParams:
    k_u: float = 0.1
    k_c: float = 10.0
    d_m: float = 0.35          # m, collision distance
    front_angle: float = np.pi / 4.0

    def __post_init__(self):
        if self.k_u <= 0 or self.k_c <= 0 or self.d_m <= 0:
            raise ValueError("reward weights and d_m must be positive")


def clip_command(u, v_max: float = V_MAX, omega_max: float = OMEGA_MAX):
    u = np.asarray(u, dtype=float)
    return np.array([np.clip(u[0], -v_max, v_max),
                     np.clip(u[1], -omega_max, omega_max)])


def step_unicycle(pose: Pose2D, u, t_s: float = T_S) -> Pose2D:
    """Exact unicycle integration under a zero-order-hold command."""
    v, om = float(u[0]), float(u[1])
    th = pose.theta
    if abs(om) > 1e-9:
        x = pose.x + (v / om) * (np.sin(th + om * t_s) - np.sin(th))
        y = pose.y - (v / om) * (np.cos(th + om * t_s) - np.cos(th))
    else:
        x = pose.x + v * t_s * np.cos(th)
        y = pose.y + v * t_s * np.sin(th)
    return Pose2D(float(x), float(y), float(wrap_angle(th + om * t_s)))


def world_to_body(pose: Pose2D, point_world) -> np.ndarray:
    p = np.asarray(point_world, dtype=float)
    dx, dy = p[0] - pose.x, p[1] - pose.y
    c, s = np.cos(pose.theta), np.sin(pose.theta)
    return np.array([c * dx + s * dy, -s * dx + c * dy])


# --------------------------------------------------------------------------
# Tag paths (world frame). Anything with position_at(k, t_s) works.

@dataclass(frozen=True)
class StaticPath:
    start: np.ndarray

    def position_at(self, k: int, t_s: float) -> np.ndarray:
        return np.asarray(self.start, dtype=float)


@dataclass(frozen=True)
class SinusoidPath:
    """Holds still for hold_steps, then follows an offset two-axis sinusoid.

    The offset form start + s(k t_s) - s(hold t_s) keeps the path continuous
    at motion onset instead of teleporting to the sinusoid's phase.
    """
    start: np.ndarray
    amp: np.ndarray      # (2,) meters
    freq: np.ndarray     # (2,) Hz
    phase: np.ndarray    # (2,) radians
    hold_steps: int

    def _s(self, t: float) -> np.ndarray:
        return self.amp * np.sin(2.0 * np.pi * self.freq * t + self.phase)

    def position_at(self, k: int, t_s: float) -> np.ndarray:
        start = np.asarray(self.start, dtype=float)
        if k <= self.hold_steps:
            return start
        return start + self._s(k * t_s) - self._s(self.hold_steps * t_s)


@dataclass(frozen=True)
class LinePath:
    """Constant-speed straight segment from start along a unit direction."""
    start: np.ndarray
    direction: np.ndarray
    speed: float
    length: float = np.inf   # stop after this many meters

    def position_at(self, k: int, t_s: float) -> np.ndarray:
        dist = min(self.speed * k * t_s, self.length)
        return np.asarray(self.start, float) + dist * np.asarray(self.direction, float)


@dataclass(frozen=True)
class CirclePath:
    """Constant-speed arc around a fixed center, counter-clockwise."""
    center: np.ndarray
    radius: float
    speed: float
    phase0: float = 0.0

    def position_at(self, k: int, t_s: float) -> np.ndarray:
        ang = self.phase0 + (self.speed / self.radius) * k * t_s
        return np.asarray(self.center, float) + self.radius * np.array(
            [np.cos(ang), np.sin(ang)])


@dataclass(frozen=True)
class SquarePath:
    """Constant-speed traversal of a square perimeter from one corner."""
    corner: np.ndarray
    first_side: np.ndarray   # unit direction of the first side
    side: float
    speed: float

    def position_at(self, k: int, t_s: float) -> np.ndarray:
        u = np.asarray(self.first_side, dtype=float)
        n = np.array([-u[1], u[0]])   # left turn at each corner
        dist = (self.speed * k * t_s) % (4.0 * self.side)
        legs = [u, n, -u, -n]
        pos = np.asarray(self.corner, dtype=float).copy()
        for leg in legs:
            step = min(dist, self.side)
            pos = pos + step * leg
            dist -= step
            if dist <= 0:
                break
        return pos


# --------------------------------------------------------------------------

def build_observation(history, h: int = H_HISTORY) -> np.ndarray:
    """Flatten the last h range triples, newest first, padding with the oldest."""
    if len(history) == 0:
        raise ValueError("history is empty")
    trips = list(history)[-h:]                # oldest .. newest
    pad = [trips[0]] * (h - len(trips))
    ordered = list(reversed(pad + trips))     # newest .. oldest
    return np.concatenate(ordered)


def compute_reward(tag_rel, u, cfg: LossConfig, extrema: LossExtrema,
                   params: RewardParams) -> float:
    p = np.asarray(tag_rel, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.hypot(p[0], p[1]) < params.d_m:      # collision dominates everything
        return -params.k_c
    u_norm = float(np.hypot(u[0], u[1]))
    r_u = u_norm / (1.0 + u_norm)
    gamma = np.arctan2(p[1], p[0])
    if p[0] > 0 and abs(gamma) < params.front_angle:
        r_l = max(0.0, 1.0 - scaled_loss(p, cfg, extrema))
        return r_l - params.k_u * r_u
    return -params.k_u * r_u


@dataclass
class EpisodeTrace:
    k: np.ndarray
    t_s: float
    robot: np.ndarray       # (n, 3) x, y, theta
    tag_body: np.ndarray    # (n, 2) true relative position
    est_body: np.ndarray    # (n, 2) NLLS estimate
    ranges: np.ndarray      # (n, 3)
    command: np.ndarray     # (n, 2)
    reward: np.ndarray      # (n,)
    gdop: np.ndarray        # (n,)
    reason: str = "timeout"

    def __len__(self):
        return len(self.k)


TRACE_HEADER = "k,t_s,ax,ay,atheta,tx,ty,est_x,est_y,d1,d2,d3,v,omega,reward,gdop"


def trace_to_csv(trace: EpisodeTrace, path) -> None:
    if len(trace) == 0:
        raise EmptyTrace("refusing to write an empty trace")
    cols = np.column_stack([
        trace.k, np.full(len(trace), trace.t_s),
        trace.robot, trace.tag_body, trace.est_body, trace.ranges,
        trace.command, trace.reward, trace.gdop])
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        for row in cols:
            fh.write(f"{int(row[0])}," + ",".join(f"{v:.9f}" for v in row[1:]) + "\n")


class LocalizationEnv:
    """Gym-style episode environment over the ranging simulation.

    Observations are the flattened range history (3*h values); the
    privileged state [x_t, y_t, theta] is exposed separately for critics.
    """

    def __init__(self, layout: AnchorLayout, model: RangingModel,
                 loss_cfg: LossConfig, extrema: LossExtrema,
                 params: RewardParams = RewardParams(),
                 t_s: float = T_S, h: int = H_HISTORY,
                 max_steps: int | None = None):
        self.layout = layout
        self.model = model
        self.loss_cfg = loss_cfg
        self.extrema = extrema
        self.params = params
        self.t_s = t_s
        self.h = h
        self.max_steps = max_steps or int(np.ceil(EPISODE_SECONDS / t_s))
        self.obs_dim = 3 * h
        self.reset_count = 0

    def reset(self, path, rng: np.random.Generator):
        self.path = path
        self.rng = rng
        self.pose = Pose2D(0.0, 0.0, 0.0)
        self.k = 0
        self.done = False
        self.reason = "running"
        tag_world = path.position_at(0, self.t_s)
        self.tag_rel = world_to_body(self.pose, tag_world)
        self.history = deque(maxlen=self.h)
        self.history.append(measure_ranges(self.tag_rel, self.layout,
                                           self.model, rng))
        self.reset_count += 1
        return build_observation(self.history, self.h)

    @property
    def privileged(self) -> np.ndarray:
        return np.array([self.tag_rel[0], self.tag_rel[1], self.pose.theta])

    def step(self, u):
        if self.done:
            raise RuntimeError("episode is finished; reset first")
        u = clip_command(u)
        self.pose = step_unicycle(self.pose, u, self.t_s)
        self.k += 1
        tag_world = self.path.position_at(self.k, self.t_s)
        self.tag_rel = world_to_body(self.pose, tag_world)
        self.history.append(measure_ranges(self.tag_rel, self.layout,
                                           self.model, self.rng))
        reward = compute_reward(self.tag_rel, u, self.loss_cfg,
                                self.extrema, self.params)
        collided = np.hypot(*self.tag_rel) < self.params.d_m
        timeout = self.k >= self.max_steps
        self.done = bool(collided or timeout)
        if collided:
            self.reason = "collision"
        elif timeout:
            self.reason = "timeout"
        obs = build_observation(self.history, self.h)
        info = {"timeout": timeout and not collided, "tag_rel": self.tag_rel.copy()}
        return obs, float(reward), self.done, info


def run_episode(policy, env: LocalizationEnv, path,
                rng: np.random.Generator, estimate: bool = True) -> EpisodeTrace:
    """Roll one episode, tracking per-step NLLS estimates for the trace.

    The estimator is warm-started at the previous step's estimate; the
    very first solve starts from the true spawn position (acquisition is
    out of scope, the benchmark measures steady-state tracking).
    """
    if hasattr(policy, "reset"):
        policy.reset()
    obs = env.reset(path, rng)
    prev_est = env.tag_rel.copy()
    rows = {name: [] for name in
            ("k", "robot", "tag", "est", "rng", "cmd", "rew")}
    while not env.done:
        u = policy.act(obs)
        obs, reward, _done, _info = env.step(u)
        d = env.history[-1]
        if estimate:
            est = trilaterate(d, env.layout, prev_est,
                              sigma_guard=env.model.sigma_range or None)
            prev_est = est.position
        rows["k"].append(env.k)
        rows["robot"].append([env.pose.x, env.pose.y, env.pose.theta])
        rows["tag"].append(env.tag_rel.copy())
        rows["est"].append(prev_est.copy() if estimate else np.full(2, np.nan))
        rows["rng"].append(np.asarray(d, dtype=float))
        rows["cmd"].append(clip_command(u))
        rows["rew"].append(reward)
    tags = np.array(rows["tag"])
    return EpisodeTrace(
        k=np.array(rows["k"], dtype=int), t_s=env.t_s,
        robot=np.array(rows["robot"]), tag_body=tags,
        est_body=np.array(rows["est"]), ranges=np.array(rows["rng"]),
        command=np.array(rows["cmd"]), reward=np.array(rows["rew"]),
        gdop=gdop_grid(tags, env.layout), reason=env.reason)
