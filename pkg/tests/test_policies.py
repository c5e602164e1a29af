import numpy as np
import pytest

from uwb_active_loc.control.mlp import Mlp
from uwb_active_loc.control.policies import (
    ActorPolicy,
    GeometricPolicy,
    StaticPolicy,
    load_policy,
    save_policy,
)
from uwb_active_loc.errors import ShapeMismatch
from uwb_active_loc.geometry import isosceles_layout
from uwb_active_loc.sensing import true_ranges

ISO = isosceles_layout()


class TestStaticPolicy:
    def test_zero_command(self):
        pol = StaticPolicy()
        np.testing.assert_array_equal(pol.act(np.ones(30)), [0.0, 0.0])
        np.testing.assert_array_equal(pol.act_batch(np.ones((7, 30))),
                                      np.zeros((7, 2)))


class TestGeometricPolicy:
    def goal(self):
        return np.array([0.8485, 0.0])

    def test_idle_at_goal(self):
        pol = GeometricPolicy(ISO, self.goal())
        obs = np.tile(true_ranges(self.goal(), ISO), 10)
        u = pol.act(obs)
        np.testing.assert_allclose(u, [0.0, 0.0], atol=1e-6)

    def test_drives_toward_distant_tag(self):
        pol = GeometricPolicy(ISO, self.goal())
        tag = np.array([1.6, 0.0])
        u = pol.act(np.tile(true_ranges(tag, ISO), 10))
        assert u[0] > 0.2           # forward, tag too far
        assert abs(u[1]) < 1e-6     # already centred

    def test_turns_toward_offset_tag(self):
        pol = GeometricPolicy(ISO, self.goal())
        tag = np.array([0.6, 0.6])
        u = pol.act(np.tile(true_ranges(tag, ISO), 10))
        assert u[1] > 0.5           # tag to the left: positive turn rate

    def test_commands_saturate(self):
        pol = GeometricPolicy(ISO, self.goal())
        tag = np.array([0.5, -2.4])
        u = pol.act(np.tile(true_ranges(tag, ISO), 10))
        assert abs(u[0]) <= 0.5 + 1e-12 and abs(u[1]) <= 1.5 + 1e-12

    def test_batch_matches_scalar(self):
        tags = np.array([[1.2, 0.3], [0.6, -0.5], [0.9, 0.0], [1.7, 1.0]])
        obs = np.stack([np.tile(true_ranges(t, ISO), 10) for t in tags])
        batch_pol = GeometricPolicy(ISO, self.goal(), sigma_guard=0.05)
        batch_pol.reset_batch(len(tags))
        ub = batch_pol.act_batch(obs)
        for i, t in enumerate(tags):
            pol = GeometricPolicy(ISO, self.goal(), sigma_guard=0.05)
            np.testing.assert_array_equal(pol.act(obs[i]), ub[i])

    def test_batch_tracks_per_lane_estimates(self):
        tags = np.array([[1.2, 0.3], [0.7, -0.4]])
        obs = np.stack([np.tile(true_ranges(t, ISO), 10) for t in tags])
        pol = GeometricPolicy(ISO, self.goal())
        pol.reset_batch(2)
        pol.act_batch(obs)
        np.testing.assert_allclose(pol._est_b, tags, atol=1e-6)


class TestActorPolicy:
    def make(self, rng=None):
        net = Mlp([30, 16, 4], rng=rng or np.random.default_rng(8))
        return ActorPolicy(net, scale=(0.5, 1.5), history=10)

    def test_bounds(self):
        pol = self.make()
        rng = np.random.default_rng(1)
        for _ in range(20):
            u = pol.act(rng.normal(0, 5, size=30))
            assert abs(u[0]) < 0.5 and abs(u[1]) < 1.5

    def test_act_batch_matches_act(self):
        pol = self.make()
        obs = np.random.default_rng(2).normal(size=(6, 30))
        ub = pol.act_batch(obs)
        for i in range(6):
            np.testing.assert_allclose(pol.act(obs[i]), ub[i], rtol=1e-12)

    def test_odd_head_rejected(self):
        with pytest.raises(ShapeMismatch):
            ActorPolicy(Mlp([30, 16, 3], rng=np.random.default_rng(0)))

    def test_deterministic(self):
        pol = self.make()
        obs = np.ones(30)
        np.testing.assert_array_equal(pol.act(obs), pol.act(obs))


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        pol = TestActorPolicy().make()
        path = tmp_path / "actor.ckpt"
        save_policy(pol, path)
        back = load_policy(path)
        assert back.net.widths == pol.net.widths
        assert back.history == pol.history
        np.testing.assert_array_equal(back.scale, pol.scale)
        for a, b in zip(pol.net.parameters(), back.net.parameters()):
            np.testing.assert_array_equal(a, b)
        obs = np.random.default_rng(3).normal(size=30)
        np.testing.assert_array_equal(pol.act(obs), back.act(obs))

    def test_save_is_deterministic(self, tmp_path):
        pol = TestActorPolicy().make()
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_policy(pol, p1)
        save_policy(pol, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(ValueError, match="magic"):
            load_policy(path)

    def test_bad_version_rejected(self, tmp_path):
        pol = TestActorPolicy().make()
        path = tmp_path / "actor.ckpt"
        save_policy(pol, path)
        data = bytearray(path.read_bytes())
        data[4] = 99
        path.write_bytes(bytes(data))
        with pytest.raises(ValueError, match="version"):
            load_policy(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        pol = TestActorPolicy().make()
        path = tmp_path / "actor.ckpt"
        save_policy(pol, path)
        with open(path, "ab") as fh:
            fh.write(b"\x00")
        with pytest.raises(ValueError, match="trailing"):
            load_policy(path)
