"""UWB range measurement simulation.

Measured ranges are true anchor-tag distances corrupted by additive
zero-mean Gaussian noise (std sigma_range). The exponential short-range
error curve c1*exp(k1*d) is the expected *bias magnitude* of a real sensor
at close range; it feeds the localization loss, it is not injected into
simulated measurements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry
from .geometry import EPS_DIST, AnchorLayout


@dataclass(frozen=True)
class RangingModel:
    sigma_range: float = 0.05      # m, std of additive Gaussian noise
    c1: float = 0.51               # m
    k1: float = -3.152             # 1/m
    min_valid_range: float = 0.10  # m, below this real sensors return garbage

    def __post_init__(self):
        if self.sigma_range < 0:
            raise ValueError("sigma_range must be >= 0")
        if self.k1 >= 0:
            raise ValueError("k1 must be negative (error decays with distance)")


def expected_short_range_error(distance, model: RangingModel):
    """c1 * exp(k1 * d); strictly positive, strictly decreasing in d."""
    d = np.asarray(distance, dtype=float)
    out = model.c1 * np.exp(model.k1 * d)
    return float(out) if np.isscalar(distance) else out


def true_ranges(tag, layout: AnchorLayout) -> np.ndarray:
    p = np.asarray(tag, dtype=float)
    dist = np.linalg.norm(p[None, :] - layout.anchors, axis=1)
    if np.any(dist <= EPS_DIST):
        raise DegenerateGeometry(f"tag {p} coincides with an anchor")
    return dist


def measure_ranges(tag, layout: AnchorLayout, model: RangingModel,
                   rng: np.random.Generator) -> np.ndarray:
    """One noisy range triple; negative draws clamp to zero."""
    dist = true_ranges(tag, layout)
    if model.sigma_range > 0:
        dist = dist + rng.normal(0.0, model.sigma_range, size=3)
    return np.maximum(dist, 0.0)


def measure_ranges_batch(tags, layout: AnchorLayout, model: RangingModel,
                         noise: np.ndarray) -> np.ndarray:
    """Vectorized ranges for tags (..., 2) given pre-drawn noise (..., 3).

    Noise is passed in, not drawn here, so callers control exactly which
    random stream produced it (the per-trial seeding contract).
    """
    p = np.asarray(tags, dtype=float)
    dist = np.linalg.norm(p[..., None, :] - layout.anchors, axis=-1)
    return np.maximum(dist + noise, 0.0)
