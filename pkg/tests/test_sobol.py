import numpy as np
import pytest

from depsens.benchmarks import benchmark
from depsens.errors import SizeMismatch, ZeroVariance
from depsens.sobol import build_pick_freeze, first_order_pf, total_effect_pf


class TestDesign:
    def test_single_input(self):
        d = build_pick_freeze([0], [1], 20, seed=3)
        np.testing.assert_array_equal(d.x_frozen[0].values, d.x_base.values)

    def test_frozen_column_shared(self):
        d = build_pick_freeze(np.zeros(4), np.ones(4), 1000, seed=3, complement=True)
        for k in range(4):
            np.testing.assert_array_equal(d.x_frozen[k].values[:, k], d.x_base.values[:, k])
            others = [j for j in range(4) if j != k]
            differs = np.all(d.x_frozen[k].values[:, others] != d.x_base.values[:, others], axis=1)
            assert differs.mean() >= 0.99
            comp = d.x_complement[k].values
            np.testing.assert_array_equal(comp[:, others], d.x_base.values[:, others])
            assert np.mean(comp[:, k] != d.x_base.values[:, k]) >= 0.99

    def test_evaluations_and_bounds(self):
        d = build_pick_freeze([-1, 2], [1, 3], 50, seed=0, complement=True)
        assert d.evaluations == 50 * 5
        for m in (d.x_base, *d.x_frozen, *d.x_complement):
            assert np.all(m.values >= [-1, 2]) and np.all(m.values < [1, 3])

    def test_deterministic(self):
        a = build_pick_freeze([0, 0], [1, 1], 10, seed=8)
        b = build_pick_freeze([0, 0], [1, 1], 10, seed=8)
        np.testing.assert_array_equal(a.x_frozen[1].values, b.x_frozen[1].values)


class TestFirstOrder:
    def test_identical_pairs(self, rng):
        y = rng.random(100)
        assert first_order_pf(y, y) == pytest.approx(1.0, abs=1e-12)

    def test_independent_noise_band(self):
        n = 2000
        for seed in range(20):
            rng = np.random.default_rng(seed)
            assert abs(first_order_pf(rng.random(n), rng.random(n))) <= 3 / np.sqrt(n)

    def test_eta1_x1(self):
        spec = benchmark("linkletter_eta1")
        d = build_pick_freeze(*spec.bounds, 10_000, seed=5)
        assert first_order_pf(spec(d.x_base), spec(d.x_frozen[0])) == pytest.approx(0.75, abs=0.05)

    def test_linear_model(self):
        c = np.array([3.0, 2.0, 1.0])
        d = build_pick_freeze(np.zeros(3), np.ones(3), 20_000, seed=6)
        y = d.x_base.values @ c
        s = [first_order_pf(y, d.x_frozen[k].values @ c) for k in range(3)]
        np.testing.assert_allclose(s, c**2 / np.sum(c**2), atol=0.03)

    def test_multivariate_output(self, rng):
        y, yf = rng.random((200, 3)), rng.random((200, 3))
        yc = y - 0.5 * (y.mean(axis=0) + yf.mean(axis=0))
        yfc = yf - 0.5 * (y.mean(axis=0) + yf.mean(axis=0))
        expect = np.sum(yc * yfc) / (0.5 * np.sum(yc**2 + yfc**2))
        assert first_order_pf(y, yf) == pytest.approx(expect, rel=1e-12)
        col = y[:, :1]
        assert first_order_pf(np.hstack([col, col]), np.hstack([yf[:, :1]] * 2)) == pytest.approx(
            first_order_pf(col, yf[:, :1]), rel=1e-12
        )

    def test_constant(self):
        with pytest.raises(ZeroVariance):
            first_order_pf(np.ones(10), np.ones(10))

    def test_shape_mismatch(self, rng):
        with pytest.raises(SizeMismatch):
            first_order_pf(rng.random(10), rng.random(11))


class TestTotal:
    def test_eta2_additive(self):
        spec = benchmark("loeppky_eta2")
        d = build_pick_freeze(*spec.bounds, 10_000, seed=12, complement=True)
        y = spec(d.x_base)
        for k in range(10):
            s1 = first_order_pf(y, spec(d.x_frozen[k]))
            st = total_effect_pf(y, spec(d.x_complement[k]))
            assert abs(st - s1) <= 0.05

    def test_ishigami_x3_interaction(self):
        spec = benchmark("ishigami_eta3")
        d = build_pick_freeze(*spec.bounds, 10_000, seed=13, complement=True)
        y = spec(d.x_base)
        s1 = first_order_pf(y, spec(d.x_frozen[2]))
        st = total_effect_pf(y, spec(d.x_complement[2]))
        assert abs(s1) < 0.05
        assert st > 0.15
