"""UWB relative localization loss: GDOP plus a short-range proximity penalty.

l(p) = GDOP(p) + alpha * sum_i c1 * exp(k1 * ||p - a_i||)

The scaled form maps the extrema over a fixed annular domain to [0, 1].
The default domain starts at 0.475 m, where the nearest anchor range stays
above 0.25 m (the short end of the exponential error model's validity),
and ends at 1.40 m, past the working band where the controller is meant
to hold the tag. Both radii are plain arguments and can be varied.

The internal evaluator uses explicit sqrt/exp formulas (no linalg helpers)
so it also accepts complex inputs; complex-step differentiation then gives
machine-precision gradients for the argmin refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, optimize

from .errors import DegenerateDomain
from .geometry import AnchorLayout
from .sensing import RangingModel

R_IN = 0.475          # m, default inner domain radius
R_OUT = 1.40          # m, default outer domain radius
DR = 0.01             # m, radial grid step
DTHETA_DEG = 0.5      # deg, angular grid step


@dataclass(frozen=True)
class LossConfig:
    layout: AnchorLayout
    model: RangingModel
    alpha: float = 10.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class LossExtrema:
    l_min: float
    l_max: float
    argmin: np.ndarray
    r_in: float
    r_out: float
    dr: float
    dtheta_deg: float


def _loss_raw(x, y, cfg: LossConfig):
    """Loss at coordinates x, y (arrays or scalars, real or complex)."""
    ax = cfg.layout.anchors[:, 0]
    ay = cfg.layout.anchors[:, 1]
    dx = np.asarray(x)[..., None] - ax
    dy = np.asarray(y)[..., None] - ay
    d = np.sqrt(dx * dx + dy * dy)
    ux = dx / d
    uy = dy / d
    a = np.sum(ux * ux, axis=-1)
    b = np.sum(ux * uy, axis=-1)
    c = np.sum(uy * uy, axis=-1)
    gdop = np.sqrt((a + c) / (a * c - b * b))
    prox = cfg.alpha * np.sum(cfg.model.c1 * np.exp(cfg.model.k1 * d), axis=-1)
    return gdop + prox


def localization_loss(tag, cfg: LossConfig) -> float:
    p = np.asarray(tag, dtype=float)
    return float(_loss_raw(p[0], p[1], cfg))


def loss_grid(points, cfg: LossConfig) -> np.ndarray:
    """Vectorized loss over points shaped (..., 2); NaN at degenerate cells."""
    p = np.asarray(points, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return _loss_raw(p[..., 0], p[..., 1], cfg)


def _loss_gradient(p, cfg: LossConfig) -> np.ndarray:
    h = 1e-200
    gx = np.imag(_loss_raw(p[0] + 1j * h, p[1], cfg)) / h
    gy = np.imag(_loss_raw(p[0], p[1] + 1j * h, cfg)) / h
    return np.array([gx, gy])


def polar_grid(r_in: float, r_out: float, dr: float = DR,
               dtheta_deg: float = DTHETA_DEG):
    """Polar sample points covering the annulus; returns (radii, angles, xy)."""
    rs = np.arange(r_in, r_out + dr / 2.0, dr)
    ths = np.arange(-np.pi, np.pi, np.deg2rad(dtheta_deg))
    rr, tt = np.meshgrid(rs, ths, indexing="ij")
    xy = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)
    return rs, ths, xy


def find_loss_extrema(cfg: LossConfig, r_in: float = R_IN, r_out: float = R_OUT,
                      dr: float = DR, dtheta_deg: float = DTHETA_DEG) -> LossExtrema:
    """Grid extrema over the annulus, argmin polished to ||grad|| < 1e-8."""
    if r_in <= cfg.layout.max_radius:
        raise ValueError("inner radius must clear the anchor footprint")
    rs, ths, xy = polar_grid(r_in, r_out, dr, dtheta_deg)
    vals = loss_grid(xy, cfg)
    imin = np.unravel_index(np.nanargmin(vals), vals.shape)
    l_max = float(np.nanmax(vals))
    p0 = xy[imin]

    res = optimize.minimize(
        lambda p: float(_loss_raw(p[0], p[1], cfg)), p0,
        jac=lambda p: _loss_gradient(p, cfg),
        method="BFGS", options={"gtol": 1e-10, "maxiter": 200})
    p_ref = res.x
    # keep the polish only if it stayed inside the domain and helped
    r_ref = np.linalg.norm(p_ref)
    if (res.fun <= vals[imin] and r_in - dr <= r_ref <= r_out + dr
            and np.linalg.norm(_loss_gradient(p_ref, cfg)) < 1e-8):
        argmin, l_min = p_ref, float(res.fun)
    else:
        argmin, l_min = p0, float(vals[imin])
    return LossExtrema(l_min=l_min, l_max=l_max, argmin=np.asarray(argmin),
                       r_in=r_in, r_out=r_out, dr=dr, dtheta_deg=dtheta_deg)


def scaled_loss(tag, cfg: LossConfig, extrema: LossExtrema) -> float:
    span = extrema.l_max - extrema.l_min
    if span < 1e-12:
        raise DegenerateDomain("loss extrema coincide")
    return (localization_loss(tag, cfg) - extrema.l_min) / span


def scaled_loss_grid(points, cfg: LossConfig, extrema: LossExtrema) -> np.ndarray:
    span = extrema.l_max - extrema.l_min
    if span < 1e-12:
        raise DegenerateDomain("loss extrema coincide")
    return (loss_grid(points, cfg) - extrema.l_min) / span


def sublevel_components(cfg: LossConfig, extrema: LossExtrema,
                        threshold: float = 0.05):
    """Connected components of {scaled loss < threshold} on the polar grid.

    Components are 4-connected in (radius, angle) index space with wrap
    in angle. Returns (count, list of (size, x_min, x_max) per component).
    """
    _rs, _ths, xy = polar_grid(extrema.r_in, extrema.r_out,
                               extrema.dr, extrema.dtheta_deg)
    scaled = scaled_loss_grid(xy, cfg, extrema)
    sub = np.nan_to_num(scaled, nan=np.inf) < threshold
    labels, _ = ndimage.label(sub)
    for i in range(labels.shape[0]):
        if sub[i, 0] and sub[i, -1] and labels[i, 0] != labels[i, -1]:
            labels[labels == labels[i, -1]] = labels[i, 0]
    ids = np.unique(labels[labels > 0])
    comps = []
    xs = xy[..., 0]
    for cid in ids:
        m = labels == cid
        comps.append((int(m.sum()), float(xs[m].min()), float(xs[m].max())))
    return len(ids), comps


_EXTREMA_CACHE: dict = {}


def default_extrema(cfg: LossConfig) -> LossExtrema:
    """Extrema on the default domain, computed once per (layout, alpha)."""
    key = (cfg.layout.anchors.tobytes(), cfg.alpha, cfg.model.c1, cfg.model.k1)
    if key not in _EXTREMA_CACHE:
        _EXTREMA_CACHE[key] = find_loss_extrema(cfg)
    return _EXTREMA_CACHE[key]
