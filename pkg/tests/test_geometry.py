import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uwb_active_loc.errors import DegenerateGeometry, SingularGeometry
from uwb_active_loc.geometry import (
    AnchorLayout,
    build_geometry_matrix,
    equilateral_layout,
    gdop_analytical,
    gdop_grid,
    isosceles_layout,
    layout_by_name,
)


def gdop_reference(tag, layout):
    """Independent GDOP via explicit matrix inverse, for cross-checking."""
    diff = np.asarray(tag, dtype=float)[None, :] - layout.anchors
    dist = np.linalg.norm(diff, axis=1)
    h = diff / dist[:, None]
    g = np.linalg.inv(h.T @ h)
    return float(np.sqrt(g[0, 0] + g[1, 1]))


# well clear of the anchors and of the far-field singular regime
tags = st.tuples(
    st.floats(min_value=0.4, max_value=3.0),
    st.floats(min_value=0.0, max_value=2 * np.pi),
).map(lambda rt: (rt[0] * np.cos(rt[1]), rt[0] * np.sin(rt[1])))


class TestLayouts:
    def test_isosceles_anchors(self):
        iso = isosceles_layout()
        np.testing.assert_allclose(
            iso.anchors, [[0.14, 0.175], [0.14, -0.175], [-0.14, 0.0]])

    def test_equilateral_side_and_centroid(self):
        eq = equilateral_layout()
        d01 = np.linalg.norm(eq.anchors[0] - eq.anchors[1])
        d12 = np.linalg.norm(eq.anchors[1] - eq.anchors[2])
        d20 = np.linalg.norm(eq.anchors[2] - eq.anchors[0])
        np.testing.assert_allclose([d01, d12, d20], 0.35, rtol=1e-12)
        np.testing.assert_allclose(eq.anchors.mean(axis=0), 0.0, atol=1e-15)
        # single vertex on the negative x-axis, pair in front
        assert eq.anchors[0][0] < 0 and abs(eq.anchors[0][1]) < 1e-15

    def test_layout_by_name(self):
        assert layout_by_name("is").name == "isosceles"
        assert layout_by_name("isosceles").name == "isosceles"
        assert layout_by_name("eq").name == "equilateral"
        with pytest.raises(ValueError):
            layout_by_name("hexagonal")

    def test_collinear_anchors_rejected(self):
        with pytest.raises(ValueError, match="collinear"):
            AnchorLayout(np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]))

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError):
            AnchorLayout(np.zeros((4, 2)))

    def test_max_radius(self):
        iso = isosceles_layout()
        assert iso.max_radius == pytest.approx(np.hypot(0.14, 0.175))


class TestGdopAnalytical:
    def test_frozen_point_isosceles(self):
        # pinned against the adjugate expansion and the matrix-inverse path
        assert gdop_analytical([1.0, 0.0], isosceles_layout()) == pytest.approx(
            3.594094012090744, rel=1e-12)

    def test_equilateral_centroid(self):
        # at the centroid the three directions are symmetric: GDOP = 2/sqrt(3)
        eq = equilateral_layout()
        centroid = eq.anchors.mean(axis=0)
        assert gdop_analytical(centroid, eq) == pytest.approx(
            2.0 / np.sqrt(3.0), rel=1e-9)

    @given(tag=tags)
    @settings(max_examples=60, deadline=None)
    def test_matches_matrix_inverse(self, tag):
        iso = isosceles_layout()
        assert gdop_analytical(tag, iso) == pytest.approx(
            gdop_reference(tag, iso), rel=1e-9)

    @given(tag=tags)
    @settings(max_examples=40, deadline=None)
    def test_mirror_symmetry(self, tag):
        # both layouts are symmetric about the x-axis
        for layout in (isosceles_layout(), equilateral_layout()):
            up = gdop_analytical([tag[0], tag[1]], layout)
            down = gdop_analytical([tag[0], -tag[1]], layout)
            assert up == pytest.approx(down, rel=1e-9)

    def test_scale_invariance(self):
        # GDOP is unitless: scaling anchors and tag together leaves it fixed
        iso = isosceles_layout()
        big = AnchorLayout(iso.anchors * 7.5)
        assert gdop_analytical([1.0, 0.4], iso) == pytest.approx(
            gdop_analytical([7.5, 3.0], big), rel=1e-9)

    def test_tag_at_anchor_degenerate(self):
        iso = isosceles_layout()
        with pytest.raises(DegenerateGeometry):
            gdop_analytical(iso.anchors[0], iso)

    def test_far_field_singular(self):
        # far away all three directions collapse onto one line
        with pytest.raises(SingularGeometry):
            gdop_analytical([1e7, 0.0], isosceles_layout())

    def test_grows_with_distance_on_axis(self):
        iso = isosceles_layout()
        vals = [gdop_analytical([r, 0.0], iso) for r in (0.5, 1.0, 2.0, 4.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestGeometryMatrix:
    def test_rows_are_unit_vectors(self):
        h = build_geometry_matrix([0.9, -0.3], isosceles_layout())
        np.testing.assert_allclose(np.linalg.norm(h, axis=1), 1.0, rtol=1e-12)

    def test_row_direction(self):
        iso = isosceles_layout()
        h = build_geometry_matrix([1.0, 0.0], iso)
        want = np.array([1.0, 0.0]) - iso.anchors[2]
        np.testing.assert_allclose(h[2], want / np.linalg.norm(want), rtol=1e-12)


class TestGdopGrid:
    def test_matches_scalar(self):
        iso = isosceles_layout()
        pts = np.array([[0.6, 0.1], [1.2, -0.8], [0.5, 0.5]])
        out = gdop_grid(pts, iso)
        want = [gdop_analytical(p, iso) for p in pts]
        np.testing.assert_allclose(out, want, rtol=1e-12)

    def test_preserves_leading_shape(self):
        pts = np.full((4, 5, 2), 0.9)
        assert gdop_grid(pts, isosceles_layout()).shape == (4, 5)

    def test_bad_cells_are_nan_not_raise(self):
        iso = isosceles_layout()
        pts = np.array([iso.anchors[1], [1e7, 0.0], [1.0, 0.0]])
        out = gdop_grid(pts, iso)
        assert np.isnan(out[0]) and np.isnan(out[1])
        assert out[2] == pytest.approx(3.594094012090744, rel=1e-12)
