"""Anchor layouts and analytical GDOP.

GDOP here is the planar, clock-free variant: H stacks the unit direction
vectors from each anchor to the tag, and GDOP = sqrt(trace((H^T H)^-1)).
The 2x2 inverse is expanded in closed form (adjugate over determinant), so
the whole computation vectorizes over arbitrary batches of tag positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, SingularGeometry

# Tags closer than this to an anchor have no defined direction vector.
EPS_DIST = 1e-9
# det(H^T H) below this means the anchor directions are effectively collinear.
DET_TOL = 1e-12


@dataclass(frozen=True)
class AnchorLayout:
    """Three anchor positions in the robot body frame, meters."""

    anchors: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        a = np.asarray(self.anchors, dtype=float)
        if a.shape != (3, 2):
            raise ValueError(f"expected 3 planar anchors, got shape {a.shape}")
        # collinear anchors make H^T H singular for every tag on their line
        u, v = a[1] - a[0], a[2] - a[0]
        area2 = abs(u[0] * v[1] - u[1] * v[0])
        if area2 < 1e-9:
            raise ValueError("anchors are collinear")
        object.__setattr__(self, "anchors", a)

    @property
    def max_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.anchors, axis=1)))


def isosceles_layout() -> AnchorLayout:
    """Forward-facing pair plus a single rear anchor (the deployed configuration)."""
    return AnchorLayout(np.array([[0.14, 0.175], [0.14, -0.175], [-0.14, 0.0]]),
                        name="isosceles")


def equilateral_layout(side: float = 0.35) -> AnchorLayout:
    """Equilateral triangle, centroid at the origin, one vertex on the negative x-axis.

    The default side length matches the lateral aperture of the isosceles
    layout (front pair 0.35 m apart), so both configurations fit the same
    robot footprint and their error statistics are directly comparable.
    """
    r = side / np.sqrt(3.0)
    ang = np.array([np.pi, np.pi / 3.0, -np.pi / 3.0])
    return AnchorLayout(r * np.stack([np.cos(ang), np.sin(ang)], axis=1),
                        name="equilateral")


def layout_by_name(name: str) -> AnchorLayout:
    if name in ("is", "isosceles"):
        return isosceles_layout()
    if name in ("eq", "equilateral"):
        return equilateral_layout()
    raise ValueError(f"unknown layout {name!r}")


def build_geometry_matrix(tag, layout: AnchorLayout) -> np.ndarray:
    """Rows are unit vectors from each anchor to the tag (3x2)."""
    p = np.asarray(tag, dtype=float)
    diff = p[None, :] - layout.anchors
    dist = np.linalg.norm(diff, axis=1)
    if np.any(dist <= EPS_DIST):
        raise DegenerateGeometry(f"tag {p} coincides with anchor {int(np.argmin(dist))}")
    return diff / dist[:, None]


def gdop_analytical(tag, layout: AnchorLayout) -> float:
    """GDOP of a single tag position. Raises on singular geometry."""
    h = build_geometry_matrix(tag, layout)
    a = float(h[:, 0] @ h[:, 0])
    b = float(h[:, 0] @ h[:, 1])
    c = float(h[:, 1] @ h[:, 1])
    det = a * c - b * b
    if det < DET_TOL:
        raise SingularGeometry(f"det(H^T H) = {det:.3e} at tag {np.asarray(tag)}")
    return float(np.sqrt((a + c) / det))


def gdop_grid(points, layout: AnchorLayout) -> np.ndarray:
    """Vectorized GDOP over an array of tag positions with shape (..., 2).

    Degenerate or singular cells come back as NaN instead of raising, which
    is what map exports want; scalar call sites should use gdop_analytical.
    """
    p = np.asarray(points, dtype=float)
    diff = p[..., None, :] - layout.anchors
    dist = np.linalg.norm(diff, axis=-1)
    bad = np.any(dist <= EPS_DIST, axis=-1)
    dist = np.where(dist <= EPS_DIST, np.nan, dist)
    u = diff / dist[..., None]
    a = np.sum(u[..., 0] ** 2, axis=-1)
    b = np.sum(u[..., 0] * u[..., 1], axis=-1)
    c = np.sum(u[..., 1] ** 2, axis=-1)
    det = a * c - b * b
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.sqrt((a + c) / det)
    out = np.where((det < DET_TOL) | bad, np.nan, out)
    return out
