"""Experiment harness: GDOP validation, map export, MLE benchmark table.

The benchmark sweeps methods x layouts x spawn distances x tag motions
and reports the Mean Localization Error of each cell over many noise
realizations. Realizations run in lockstep lanes (one vectorized solver
call per step for the whole batch), with one child generator per
realization so a lane reproduces exactly what a scalar episode with that
child would do.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrace, EstimationError, SingularGeometry
from .estimation import gdop_empirical, trilaterate_batch
from .geometry import AnchorLayout, gdop_analytical, gdop_grid, layout_by_name
from .loss import LossConfig, LossExtrema, loss_grid, scaled_loss_grid
from .sensing import RangingModel, measure_ranges_batch
from .sim import (EPISODE_SECONDS, H_HISTORY, OMEGA_MAX, T_S, V_MAX, CirclePath,
                  EpisodeTrace, LinePath, RewardParams, SquarePath, StaticPath,
                  wrap_angle)

METHODS = ("SUL-EQ", "SUL-IS", "AUL-EQ", "AUL-IS", "heuristic")
MODES = ("static_front", "static_side", "static_behind", "line", "circle", "square")
INIT_CM = (70.0, 85.0, 100.0, 150.0, 200.0)

TAG_SPEED = 0.05      # m/s, circle and square benchmark paths
LINE_LENGTH = 2.0     # m, traversed over the whole episode
SQUARE_SIDE = 1.0     # m

BENCH_HEADER = "method,layout,init_cm,mode,mu_cm,sigma_cm,n_runs,seed"
VALIDATE_HEADER = "angle_deg,radius_m,gdop_analytical,gdop_empirical"
GDOP_MAP_HEADER = "x_m,y_m,gdop"
LOSS_MAP_HEADER = "x_m,y_m,gdop,loss,scaled_loss"


@dataclass(frozen=True)
class Scenario:
    """One benchmark cell: who moves the robot, where the tag spawns, how it moves."""
    method: str
    layout: str          # "eq" | "is"
    init_cm: float
    mode: str
    n_runs: int = 1000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.layout not in ("eq", "is"):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.method.endswith("-EQ") and self.layout != "eq":
            raise ValueError(f"{self.method} requires the equilateral layout")
        if self.method.endswith("-IS") and self.layout != "is":
            raise ValueError(f"{self.method} requires the isosceles layout")
        if self.init_cm <= 0:
            raise ValueError("init_cm must be positive")
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")


@dataclass(frozen=True)
class MleReport:
    mu_cm: float         # mean of per-run Mean Localization Errors
    sigma_cm: float      # their standard deviation
    per_run_cm: np.ndarray

    def __post_init__(self):
        if np.isfinite(self.mu_cm) and (self.mu_cm < 0 or self.sigma_cm < 0):
            raise ValueError("mu and sigma cannot be negative")


def compute_mle(trace: EpisodeTrace) -> float:
    """Mean over steps of the estimate-to-truth distance, in centimeters."""
    if len(trace) == 0:
        raise EmptyTrace("trace has no steps")
    if np.isnan(trace.est_body).any():
        raise EmptyTrace("trace has no estimates")
    err = np.linalg.norm(trace.est_body - trace.tag_body, axis=1)
    return float(np.mean(err)) * 100.0


def benchmark_path(scenario: Scenario, tag_speed: float = TAG_SPEED,
                   line_length: float = LINE_LENGTH,
                   square_side: float = SQUARE_SIDE):
    """Tag path for a cell; the robot spawns at the origin heading +x."""
    d = scenario.init_cm / 100.0
    if scenario.mode == "static_front":
        return StaticPath(np.array([d, 0.0]))
    if scenario.mode == "static_side":
        return StaticPath(np.array([0.0, d]))
    if scenario.mode == "static_behind":
        return StaticPath(np.array([-d, 0.0]))
    if scenario.mode == "line":
        # recede radially from the spawn point, covering the full segment
        return LinePath(np.array([d, 0.0]), np.array([1.0, 0.0]),
                        speed=line_length / EPISODE_SECONDS, length=line_length)
    if scenario.mode == "circle":
        return CirclePath(np.array([0.0, 0.0]), radius=d, speed=tag_speed)
    return SquarePath(np.array([d, 0.0]), np.array([0.0, 1.0]),
                      side=square_side, speed=tag_speed)


def _rel_batch(poses, tag_world):
    dx = tag_world[0] - poses[:, 0]
    dy = tag_world[1] - poses[:, 1]
    c, s = np.cos(poses[:, 2]), np.sin(poses[:, 2])
    return np.stack([c * dx + s * dy, -s * dx + c * dy], axis=1)


def _step_batch(poses, u, t_s):
    v, om = u[:, 0], u[:, 1]
    th = poses[:, 2]
    straight = np.abs(om) <= 1e-9
    om_safe = np.where(straight, 1.0, om)
    x_arc = poses[:, 0] + (v / om_safe) * (np.sin(th + om * t_s) - np.sin(th))
    y_arc = poses[:, 1] - (v / om_safe) * (np.cos(th + om * t_s) - np.cos(th))
    x = np.where(straight, poses[:, 0] + v * t_s * np.cos(th), x_arc)
    y = np.where(straight, poses[:, 1] + v * t_s * np.sin(th), y_arc)
    return np.stack([x, y, wrap_angle(th + om * t_s)], axis=1)


def _obs_batch(hist, h):
    trips = list(hist)[-h:]
    pad = [trips[0]] * (h - len(trips))
    return np.concatenate(list(reversed(pad + trips)), axis=1)


def run_cell(scenario: Scenario, policy, rng: np.random.Generator,
             model: RangingModel = RangingModel(),
             params: RewardParams = RewardParams(),
             t_s: float = T_S, h: int = H_HISTORY,
             max_steps: int | None = None,
             tag_speed: float = TAG_SPEED, line_length: float = LINE_LENGTH,
             square_side: float = SQUARE_SIDE) -> MleReport:
    """All realizations of one cell, advanced together step by step.

    Per-lane state mirrors the scalar episode engine exactly: measure at
    spawn, then per step command -> move -> measure -> estimate, with the
    estimator warm-started on its previous solution (truth at spawn).
    Lanes stop accruing error once the tag breaches the collision radius.
    """
    layout = layout_by_name(scenario.layout)
    path = benchmark_path(scenario, tag_speed, line_length, square_side)
    n = scenario.n_runs
    steps = max_steps or int(np.ceil(EPISODE_SECONDS / t_s))
    children = rng.spawn(n)
    sigma = model.sigma_range

    poses = np.zeros((n, 3))
    tag_rel = _rel_batch(poses, path.position_at(0, t_s))
    noise = (np.stack([c.normal(0.0, sigma, size=3) for c in children])
             if sigma > 0 else np.zeros((n, 3)))
    hist = deque([measure_ranges_batch(tag_rel, layout, model, noise)], maxlen=h)
    est = tag_rel.copy()
    alive = np.ones(n, dtype=bool)
    err_sum = np.zeros(n)
    err_cnt = np.zeros(n, dtype=int)

    if hasattr(policy, "reset_batch"):
        policy.reset_batch(n)
    elif hasattr(policy, "reset"):
        policy.reset()

    for k in range(1, steps + 1):
        u = np.asarray(policy.act_batch(_obs_batch(hist, h)), dtype=float)
        u = np.clip(u, [-V_MAX, -OMEGA_MAX], [V_MAX, OMEGA_MAX])
        poses = _step_batch(poses, u, t_s)
        tag_rel = _rel_batch(poses, path.position_at(k, t_s))
        noise = (np.stack([c.normal(0.0, sigma, size=3) for c in children])
                 if sigma > 0 else np.zeros((n, 3)))
        meas = measure_ranges_batch(tag_rel, layout, model, noise)
        hist.append(meas)
        est, _res, _its, _conv = trilaterate_batch(meas, layout, est,
                                                   sigma_guard=sigma or None)
        err = np.linalg.norm(est - tag_rel, axis=1)
        err_sum += np.where(alive, err, 0.0)
        err_cnt += alive
        alive &= np.hypot(tag_rel[:, 0], tag_rel[:, 1]) >= params.d_m
        if not alive.any():
            break

    per_run = err_sum / np.maximum(err_cnt, 1) * 100.0
    return MleReport(float(np.mean(per_run)), float(np.std(per_run)), per_run)


def scenario_grid(methods, init_cms=INIT_CM, modes=MODES, n_runs: int = 1000):
    """Cross product of benchmark cells in a fixed, reproducible order."""
    cells = []
    for method in methods:
        layout = "eq" if method.endswith("-EQ") else "is"
        for init_cm in init_cms:
            for mode in modes:
                cells.append(Scenario(method, layout, float(init_cm), mode, n_runs))
    return cells


def run_benchmark(scenarios, policies, seed: int,
                  model: RangingModel = RangingModel(),
                  params: RewardParams = RewardParams(),
                  tag_speed: float = TAG_SPEED, line_length: float = LINE_LENGTH,
                  square_side: float = SQUARE_SIDE):
    """Run every cell; a failing cell is reported as NaN, not fatal.

    policies maps method name to a policy object; methods starting with
    SUL default to the do-nothing baseline when absent.
    """
    from .control.policies import StaticPolicy
    rng = np.random.default_rng(seed)
    results = []
    for sc in scenarios:
        cell_rng = rng.spawn(1)[0]
        policy = policies.get(sc.method)
        if policy is None and sc.method.startswith("SUL"):
            policy = StaticPolicy()
        try:
            if policy is None:
                raise KeyError(f"no policy supplied for {sc.method}")
            report = run_cell(sc, policy, cell_rng, model=model, params=params,
                              tag_speed=tag_speed, line_length=line_length,
                              square_side=square_side)
        except (KeyError, EstimationError, ValueError) as exc:
            report = MleReport(float("nan"), float("nan"),
                               np.full(sc.n_runs, np.nan))
            print(f"cell {sc.method}/{sc.mode}/{sc.init_cm:g} failed: {exc}")
        results.append((sc, report))
    return results


def benchmark_to_csv(results, seed: int, path) -> None:
    with open(path, "w") as fh:
        fh.write(BENCH_HEADER + "\n")
        for sc, rep in results:
            mu = "" if np.isnan(rep.mu_cm) else f"{rep.mu_cm:.3f}"
            sg = "" if np.isnan(rep.sigma_cm) else f"{rep.sigma_cm:.3f}"
            fh.write(f"{sc.method},{sc.layout},{sc.init_cm:g},{sc.mode},"
                     f"{mu},{sg},{sc.n_runs},{seed}\n")


# --------------------------------------------------------------------------
# GDOP validation and map export

def validate_gdop(layout: AnchorLayout, radii=(0.50, 0.74, 1.00),
                  n_trials: int = 1000, sigma: float = 0.05,
                  step_deg: float = 5.0, seed: int = 0):
    """Analytical vs Monte Carlo GDOP on rings around the robot.

    Returns rows (angle_deg, radius_m, analytical, empirical); a value is
    None where the geometry is singular or the Monte Carlo failed.
    """
    rng = np.random.default_rng(seed)
    model = RangingModel(sigma_range=sigma)
    rows = []
    for radius in radii:
        for ang in np.arange(0.0, 360.0, step_deg):
            p = radius * np.array([np.cos(np.radians(ang)), np.sin(np.radians(ang))])
            try:
                ana = gdop_analytical(p, layout)
            except SingularGeometry:
                ana = None
            child = rng.spawn(1)[0]
            try:
                emp = gdop_empirical(p, layout, model, n_trials, child)
            except (EstimationError, ValueError):
                emp = None
            rows.append((float(ang), float(radius), ana, emp))
    return rows


def validate_gdop_to_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(VALIDATE_HEADER + "\n")
        for ang, radius, ana, emp in rows:
            a = "" if ana is None else f"{ana:.6f}"
            e = "" if emp is None else f"{emp:.6f}"
            fh.write(f"{ang:g},{radius:g},{a},{e}\n")


def _square_grid(r_max: float, res: float):
    axis = np.arange(-r_max, r_max + res / 2.0, res)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return xx, yy


def export_gdop_map(layout: AnchorLayout, path,
                    r_min: float = 0.35, r_max: float = 2.0,
                    res: float = 0.02) -> None:
    """Cartesian GDOP samples over the annulus r_min..r_max, CSV."""
    xx, yy = _square_grid(r_max, res)
    rr = np.hypot(xx, yy)
    g = gdop_grid(np.stack([xx, yy], axis=-1), layout)
    with open(path, "w") as fh:
        fh.write(GDOP_MAP_HEADER + "\n")
        for i in range(xx.shape[0]):
            for j in range(xx.shape[1]):
                if not (r_min <= rr[i, j] <= r_max):
                    continue
                val = "" if np.isnan(g[i, j]) else f"{g[i, j]:.6f}"
                fh.write(f"{xx[i, j]:.6f},{yy[i, j]:.6f},{val}\n")


def export_loss_map(cfg: LossConfig, extrema: LossExtrema, path,
                    r_min: float | None = None, r_max: float | None = None,
                    res: float = 0.02) -> None:
    """Loss landscape samples (raw and rescaled to [0, 1]) over the annulus."""
    r_min = extrema.r_in if r_min is None else r_min
    r_max = extrema.r_out if r_max is None else r_max
    xx, yy = _square_grid(r_max, res)
    rr = np.hypot(xx, yy)
    pts = np.stack([xx, yy], axis=-1)
    g = gdop_grid(pts, cfg.layout)
    lo = loss_grid(pts, cfg)
    sc = scaled_loss_grid(pts, cfg, extrema)
    with open(path, "w") as fh:
        fh.write(LOSS_MAP_HEADER + "\n")
        for i in range(xx.shape[0]):
            for j in range(xx.shape[1]):
                if not (r_min <= rr[i, j] <= r_max):
                    continue
                gv = "" if np.isnan(g[i, j]) else f"{g[i, j]:.6f}"
                fh.write(f"{xx[i, j]:.6f},{yy[i, j]:.6f},{gv},"
                         f"{lo[i, j]:.6f},{sc[i, j]:.6f}\n")
