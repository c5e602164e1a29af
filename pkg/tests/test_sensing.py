import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uwb_active_loc.errors import DegenerateGeometry
from uwb_active_loc.geometry import isosceles_layout
from uwb_active_loc.sensing import (
    RangingModel,
    expected_short_range_error,
    measure_ranges,
    measure_ranges_batch,
    true_ranges,
)


class TestRangingModel:
    def test_defaults(self):
        m = RangingModel()
        assert (m.sigma_range, m.c1, m.k1, m.min_valid_range) == (
            0.05, 0.51, -3.152, 0.10)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            RangingModel(sigma_range=-0.01)

    def test_positive_k1_rejected(self):
        with pytest.raises(ValueError):
            RangingModel(k1=0.5)


class TestShortRangeError:
    def test_frozen_value(self):
        # 0.51 * exp(-3.152 * 0.25)
        assert expected_short_range_error(0.25, RangingModel()) == pytest.approx(
            0.231924, abs=1e-6)

    def test_scalar_in_scalar_out(self):
        out = expected_short_range_error(0.5, RangingModel())
        assert isinstance(out, float)

    def test_array_in_array_out(self):
        out = expected_short_range_error(np.array([0.2, 0.5]), RangingModel())
        assert out.shape == (2,)

    @given(st.floats(min_value=0.0, max_value=5.0),
           st.floats(min_value=0.01, max_value=5.0))
    @settings(max_examples=50)
    def test_strictly_decreasing_and_positive(self, d, step):
        m = RangingModel()
        near = expected_short_range_error(d, m)
        far = expected_short_range_error(d + step, m)
        assert 0 < far < near


class TestTrueRanges:
    def test_hand_computed(self):
        # anchors (0.14, +-0.175) and (-0.14, 0) against tag (1, 0)
        r = true_ranges([1.0, 0.0], isosceles_layout())
        np.testing.assert_allclose(
            r, [np.sqrt(0.86**2 + 0.175**2), np.sqrt(0.86**2 + 0.175**2), 1.14],
            rtol=1e-12)

    def test_tag_on_anchor_raises(self):
        iso = isosceles_layout()
        with pytest.raises(DegenerateGeometry):
            true_ranges(iso.anchors[2], iso)


class TestMeasureRanges:
    def test_zero_sigma_is_exact(self):
        iso = isosceles_layout()
        m = RangingModel(sigma_range=0.0)
        r = measure_ranges([0.9, 0.2], iso, m, np.random.default_rng(0))
        np.testing.assert_array_equal(r, true_ranges([0.9, 0.2], iso))

    def test_noise_matches_generator(self):
        iso = isosceles_layout()
        m = RangingModel(sigma_range=0.05)
        r = measure_ranges([0.9, 0.2], iso, m, np.random.default_rng(7))
        want = true_ranges([0.9, 0.2], iso) + \
            np.random.default_rng(7).normal(0.0, 0.05, size=3)
        np.testing.assert_array_equal(r, np.maximum(want, 0.0))

    def test_negative_draws_clamp_to_zero(self):
        iso = isosceles_layout()
        m = RangingModel(sigma_range=50.0)
        rng = np.random.default_rng(3)
        hit = False
        for _ in range(50):
            r = measure_ranges([0.5, 0.0], iso, m, rng)
            assert np.all(r >= 0.0)
            hit = hit or np.any(r == 0.0)
        assert hit  # with sigma 50 m some draws must have clamped

    def test_batch_matches_scalar_given_same_noise(self):
        iso = isosceles_layout()
        m = RangingModel(sigma_range=0.05)
        tags = np.array([[0.9, 0.2], [1.4, -0.6], [0.5, 0.5]])
        noise = np.random.default_rng(11).normal(0.0, 0.05, size=(3, 3))
        got = measure_ranges_batch(tags, iso, m, noise)
        for i, tag in enumerate(tags):
            want = np.maximum(true_ranges(tag, iso) + noise[i], 0.0)
            np.testing.assert_array_equal(got[i], want)

    def test_batch_shape(self):
        iso = isosceles_layout()
        tags = np.full((4, 6, 2), 0.8)
        noise = np.zeros((4, 6, 3))
        assert measure_ranges_batch(tags, iso, RangingModel(), noise).shape == (4, 6, 3)
