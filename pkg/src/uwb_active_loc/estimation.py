"""NLLS trilateration and the statistical (Monte Carlo) GDOP.

The solver is Levenberg-Marquardt on the range residuals
f_i(p) = ||p - a_i|| - d_i with the analytic Jacobian whose rows are the
unit anchor-to-tag directions. Cost is sum(f^2), gradient 2 J^T f.
A damped normal-equation step is accepted when it reduces the cost;
lambda shrinks x10 on accept and grows x10 on reject.

Both a scalar solver and a lane-per-trial vectorized solver are provided.
They follow the identical accept/reject trajectory, which the test suite
checks bit-for-bit; the vectorized one exists purely for throughput.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, EstimationError
from .geometry import EPS_DIST, AnchorLayout
from .sensing import RangingModel

LAMBDA0 = 1e-3
MAX_ITER = 100
GRAD_TOL = 1e-10
STEP_TOL = 1e-12   # relative step size that counts as converged


@dataclass(frozen=True)
class Estimate:
    position: np.ndarray   # p_hat, body frame, meters
    residual_norm: float   # sqrt(sum f_i^2) at the returned position
    iterations: int
    converged: bool


def _residual(p, anchors, ranges):
    d = np.linalg.norm(p[None, :] - anchors, axis=1)
    return d - ranges, d


def _principal_axis_reflection(p, anchors):
    """Reflect p across the principal axis of the anchor scatter.

    Used as a fallback start when a solve appears captured by the mirror
    basin on the wrong side of the (nearly collinear) anchor line.
    """
    centroid = anchors.mean(axis=0)
    centered = anchors - centroid
    cov = centered.T @ centered
    w, v = np.linalg.eigh(cov)
    axis = v[:, -1]  # leading eigenvector
    rel = p - centroid
    along = (rel @ axis) * axis
    return centroid + 2.0 * along - rel


def trilaterate(ranges, layout: AnchorLayout, initial_guess,
                sigma_guard: float | None = None) -> Estimate:
    """Solve one trilateration problem.

    sigma_guard, when given, enables the mirror re-solve: a converged fit
    whose residual norm exceeds 6*sigma*sqrt(3) is retried from the
    reflection of the solution across the anchor principal axis, keeping
    whichever fit has the lower residual.
    """
    est = _solve_scalar(np.asarray(ranges, float), layout.anchors,
                        np.asarray(initial_guess, float))
    if (sigma_guard is not None and est.converged
            and est.residual_norm > 6.0 * sigma_guard * np.sqrt(3.0)):
        alt_start = _principal_axis_reflection(est.position, layout.anchors)
        alt = _solve_scalar(np.asarray(ranges, float), layout.anchors, alt_start)
        if alt.residual_norm < est.residual_norm:
            est = alt
    return est


def _solve_scalar(ranges, anchors, p):
    # Every float expression here is kept elementwise (no matmul) and in
    # the same order as _solve_batch, so both walk identical accept/reject
    # trajectories bit for bit.
    lam = LAMBDA0
    diff = p[None, :] - anchors
    d = np.sqrt(np.sum(diff * diff, axis=1))
    f = d - ranges
    cost = np.sum(f * f)
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        if np.any(d <= EPS_DIST):
            raise DegenerateGeometry(f"iterate {p} landed on an anchor")
        jac = diff / d[:, None]
        g1 = 2.0 * np.sum(jac[:, 0] * f)
        g2 = 2.0 * np.sum(jac[:, 1] * f)
        if np.sqrt(g1 * g1 + g2 * g2) < GRAD_TOL:
            converged = True
            break
        jtj11 = np.sum(jac[:, 0] * jac[:, 0])
        jtj22 = np.sum(jac[:, 1] * jac[:, 1])
        jtj12 = np.sum(jac[:, 0] * jac[:, 1])
        a11 = jtj11 + lam
        a22 = jtj22 + lam
        det = a11 * a22 - jtj12 * jtj12
        rhs1 = np.sum(jac[:, 0] * f)
        rhs2 = np.sum(jac[:, 1] * f)
        step = np.array([(-a22 * rhs1 + jtj12 * rhs2) / det,
                         (jtj12 * rhs1 - a11 * rhs2) / det])
        snorm = np.sqrt(np.sum(step * step))
        pnorm = np.sqrt(np.sum(p * p))
        if snorm <= STEP_TOL * (pnorm + STEP_TOL):
            converged = True     # damping has shrunk steps below resolution
            break
        cand = p + step
        cdiff = cand[None, :] - anchors
        cd = np.sqrt(np.sum(cdiff * cdiff, axis=1))
        cf = cd - ranges
        ccost = np.sum(cf * cf)
        if ccost < cost:
            p, diff, d, f, cost = cand, cdiff, cd, cf, ccost
            lam = max(lam / 10.0, 1e-12)
        else:
            lam *= 10.0
    return Estimate(p, float(np.sqrt(cost)), it, converged)


def trilaterate_batch(ranges, layout: AnchorLayout, initial_guess,
                      sigma_guard: float | None = None):
    """Vectorized trilateration over n independent problems.

    ranges (n, 3), initial_guess (n, 2). Returns (positions (n, 2),
    residual_norms (n,), iterations (n,), converged (n,)). Rows whose
    iterate degenerates onto an anchor come back NaN and non-converged
    rather than raising, so one bad lane cannot kill a Monte Carlo batch.
    """
    r = np.asarray(ranges, float)
    p = np.asarray(initial_guess, float).copy()
    pos, res, its, conv = _solve_batch(r, layout.anchors, p)
    if sigma_guard is not None:
        thresh = 6.0 * sigma_guard * np.sqrt(3.0)
        retry = conv & (res > thresh)
        if np.any(retry):
            alt_start = np.stack([
                _principal_axis_reflection(pos[i], layout.anchors)
                for i in np.flatnonzero(retry)])
            apos, ares, aits, aconv = _solve_batch(r[retry], layout.anchors, alt_start)
            better = ares < res[retry]
            idx = np.flatnonzero(retry)[better]
            pos[idx] = apos[better]
            res[idx] = ares[better]
            its[idx] = aits[better]
            conv[idx] = aconv[better]
    return pos, res, its, conv


def _solve_batch(ranges, anchors, p):
    n = p.shape[0]
    lam = np.full(n, LAMBDA0)
    diff = p[:, None, :] - anchors[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    f = d - ranges
    cost = np.sum(f * f, axis=1)
    converged = np.zeros(n, dtype=bool)
    dead = np.zeros(n, dtype=bool)       # degenerate lanes, frozen as NaN
    iterations = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)
    for _ in range(MAX_ITER):
        degen = active & np.any(d <= EPS_DIST, axis=1)
        if np.any(degen):
            dead |= degen
            active &= ~degen
        if not np.any(active):
            break
        iterations[active] += 1
        with np.errstate(invalid="ignore", divide="ignore"):
            jac = diff / d[:, :, None]                  # (n, 3, 2)
            g1 = 2.0 * np.sum(jac[:, :, 0] * f, axis=1)
            g2 = 2.0 * np.sum(jac[:, :, 1] * f, axis=1)
            newly = active & (np.sqrt(g1 * g1 + g2 * g2) < GRAD_TOL)
            converged |= newly
            active &= ~newly
            if not np.any(active):
                break
            jtj11 = np.sum(jac[:, :, 0] * jac[:, :, 0], axis=1)
            jtj22 = np.sum(jac[:, :, 1] * jac[:, :, 1], axis=1)
            jtj12 = np.sum(jac[:, :, 0] * jac[:, :, 1], axis=1)
            a11 = jtj11 + lam
            a22 = jtj22 + lam
            det = a11 * a22 - jtj12 * jtj12
            rhs1 = np.sum(jac[:, :, 0] * f, axis=1)
            rhs2 = np.sum(jac[:, :, 1] * f, axis=1)
            step = np.stack([(-a22 * rhs1 + jtj12 * rhs2) / det,
                             (jtj12 * rhs1 - a11 * rhs2) / det], axis=1)
            snorm = np.sqrt(np.sum(step * step, axis=1))
            pnorm = np.sqrt(np.sum(p * p, axis=1))
            tiny = active & (snorm <= STEP_TOL * (pnorm + STEP_TOL))
            converged |= tiny    # damping has shrunk steps below resolution
            active &= ~tiny
            if not np.any(active):
                break
            cand = p + step
            cdiff = cand[:, None, :] - anchors[None, :, :]
            cd = np.sqrt(np.sum(cdiff * cdiff, axis=2))
            cf = cd - ranges
            ccost = np.sum(cf * cf, axis=1)
        accept = active & (ccost < cost)
        p = np.where(accept[:, None], cand, p)
        diff = np.where(accept[:, None, None], cdiff, diff)
        d = np.where(accept[:, None], cd, d)
        f = np.where(accept[:, None], cf, f)
        cost = np.where(accept, ccost, cost)
        lam = np.where(accept, np.maximum(lam / 10.0, 1e-12),
                       np.where(active, lam * 10.0, lam))
    p = np.where(dead[:, None], np.nan, p)
    cost = np.where(dead, np.nan, cost)
    return p, np.sqrt(cost), iterations, converged & ~dead


def gdop_empirical(tag, layout: AnchorLayout, model: RangingModel,
                   n_trials: int, rng: np.random.Generator) -> float:
    """Monte Carlo GDOP: RMS scatter of NLLS estimates over sigma_range.

    Each trial gets its own child generator (fixed trial-to-seed mapping,
    so the result does not depend on how trials might be partitioned
    across workers) and is warm-started at the true position. Trials that
    fail to converge are dropped; more than 10% dropped is an error.
    """
    if n_trials < 2:
        raise ValueError("need at least 2 trials")
    if model.sigma_range <= 0:
        raise ValueError("empirical GDOP needs sigma_range > 0")
    p_true = np.asarray(tag, float)
    children = rng.spawn(n_trials)
    noise = np.stack([c.normal(0.0, model.sigma_range, size=3) for c in children])
    dist = np.linalg.norm(p_true[None, :] - layout.anchors, axis=1)
    ranges = np.maximum(dist[None, :] + noise, 0.0)
    init = np.broadcast_to(p_true, (n_trials, 2))
    pos, _res, _its, conv = trilaterate_batch(ranges, layout, init,
                                              sigma_guard=model.sigma_range)
    n_bad = int(np.sum(~conv))
    if n_bad > 0.10 * n_trials:
        raise EstimationError(f"{n_bad}/{n_trials} trials failed to converge")
    good = pos[conv]
    mu = good.mean(axis=0)
    scatter = good - mu
    rms = np.sqrt(np.mean(np.sum(scatter * scatter, axis=1)))
    return float(rms / model.sigma_range)
