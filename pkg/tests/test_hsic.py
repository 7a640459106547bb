import itertools

import numpy as np
import pytest

from depsens.benchmarks import benchmark, level_set_transform
from depsens.data import sample_uniform
from depsens.errors import BadB, SizeMismatch
from depsens.hsic import (
    HsicConfig,
    hsic,
    hsic_excess_from_grams,
    hsic_from_grams,
    hsic_index,
    hsic_pick_freeze,
    hsic_r,
    permutation_test,
)
from depsens.kernels import categorical, center, distance_induced, gaussian, gram, laplace, resolve_bandwidth
from depsens.sobol import build_pick_freeze

from . import oracles


class TestHsic:
    def test_constant_output(self, rng):
        assert hsic(rng.random(10), np.full(10, 2.0), HsicConfig(gaussian(), gaussian(1.0))) == pytest.approx(0, abs=1e-12)

    def test_two_point_hand_value(self):
        cfg = HsicConfig(distance_induced(), distance_induced())
        assert hsic(np.array([0.0, 1.0]), np.array([0.0, 2.0]), cfg) == pytest.approx(0.125, abs=1e-15)

    @pytest.mark.parametrize("trial", range(5))
    def test_three_sum_oracle(self, trial):
        rng = np.random.default_rng(trial)
        x, y = rng.random((6, 2)), rng.random((6, 1))
        kx = oracles.gaussian_gram(x, oracles.median_positive_distance(x))
        ky = oracles.gaussian_gram(y, oracles.median_positive_distance(y))
        assert hsic(x, y) == pytest.approx(oracles.naive_hsic(kx, ky), rel=1e-10)

    def test_symmetry(self, rng):
        x, y = rng.random((25, 2)), rng.random((25, 3))
        a = hsic(x, y, HsicConfig(gaussian(), laplace(0.7)))
        b = hsic(y, x, HsicConfig(laplace(0.7), gaussian()))
        assert a == pytest.approx(b, rel=1e-12)

    def test_nonnegative(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 40))
            assert hsic(rng.standard_normal((n, 2)), rng.standard_normal(n)) >= 0.0

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            hsic(np.zeros(3), np.zeros(4))
        with pytest.raises(SizeMismatch):
            hsic_from_grams(np.eye(3), np.eye(4))


class TestHsicR:
    def test_self_is_one(self, rng):
        x = rng.random((30, 2))
        assert hsic_r(x, x, HsicConfig(gaussian(), gaussian())) == pytest.approx(1.0, abs=1e-12)

    def test_constant_is_zero(self, rng):
        assert hsic_r(rng.random(10), np.ones(10), HsicConfig(gaussian(), gaussian(1.0))) == 0.0

    def test_bounded(self, rng):
        for _ in range(30):
            v = hsic_r(rng.standard_normal((30, 2)), rng.standard_normal(30))
            assert 0.0 <= v <= 1.0

    def test_ishigami_x3_above_null(self):
        spec = benchmark("ishigami_eta3")
        x = sample_uniform(*spec.bounds, 200, seed=4)
        y = spec(x)
        null = permutation_test("hsic_r", x.values[:, 2], y, B=199, seed=1)
        assert null.p_value < 0.01
        assert hsic_index(x, [2], y)[0] == pytest.approx(null.observed, rel=1e-12)


class TestExcess:
    def test_matches_exact_permutation_mean(self, rng):
        n = 5
        Kx = gram(gaussian(), rng.random((n, 2)))
        Ky = gram(gaussian(), rng.random(n))
        A = center(Kx)
        vals = [np.sum(A * Ky[np.ix_(p, p)]) / n**2 for p in map(list, itertools.permutations(range(n)))]
        assert hsic_excess_from_grams(Kx, Ky) == pytest.approx(hsic_from_grams(Kx, Ky) - np.mean(vals), abs=1e-14)


class TestPickFreeze:
    def test_function_of_frozen_input(self):
        design = build_pick_freeze([0, 0], [1, 1], 100, seed=1)
        y = np.exp(design.x_base.values[:, 1])
        yf = np.exp(design.x_frozen[1].values[:, 1])
        assert hsic_pick_freeze(y, yf) == pytest.approx(1.0, abs=1e-12)

    def test_independent_input(self):
        below = 0
        for t in range(100):
            design = build_pick_freeze([0, 0], [1, 1], 500, seed=2000 + t)
            y = design.x_base.values[:, 1] ** 2
            yf = design.x_frozen[0].values[:, 1] ** 2
            k = resolve_bandwidth(gaussian(), np.concatenate([y, yf]))
            cfg = HsicConfig(k, k)
            null = permutation_test("hsic_r", y, yf, B=99, seed=t, cfg=cfg)
            assert null.observed == pytest.approx(hsic_pick_freeze(y, yf), rel=1e-10)
            below += null.observed <= null.quantile(0.95)
        assert below >= 90

    def test_level_set_x3_above_x1_x2(self):
        spec = benchmark("ishigami_eta3")
        design = build_pick_freeze(*spec.bounds, 500, seed=31)
        z = level_set_transform(spec(design.x_base), 10.0)
        s = [hsic_pick_freeze(z, level_set_transform(spec(design.x_frozen[k]), 10.0), categorical()) for k in range(3)]
        assert s[2] > max(s[0], s[1])


class TestPermutationTest:
    def test_bad_b(self, rng):
        with pytest.raises(BadB):
            permutation_test("hsic", rng.random(5), rng.random(5), B=0)

    def test_p_value_convention(self, rng):
        null = permutation_test("hsic", rng.random(30), rng.random(30), B=49, seed=2)
        count = np.sum(null.statistics >= null.observed)
        assert null.p_value == pytest.approx((1 + count) / 50)
        assert null.num_permutations == 49

    def test_deterministic_across_workers(self, rng):
        x, y = rng.random(40), rng.random(40)
        a = permutation_test("hsic_r", x, y, B=64, seed=5)
        b = permutation_test("hsic_r", x, y, B=64, seed=5, workers=4)
        np.testing.assert_array_equal(a.statistics, b.statistics)

    def test_callable_matches_named(self, rng):
        x, y = rng.random(30), rng.random(30)
        a = permutation_test("hsic", x, y, B=20, seed=3)
        b = permutation_test(lambda u, v: hsic(u, v), x, y, B=20, seed=3)
        np.testing.assert_allclose(a.statistics, b.statistics, rtol=1e-10)

    def test_size(self):
        rejections = 0
        for t in range(200):
            rng = np.random.default_rng([11, t])
            rejections += permutation_test("hsic", rng.random(100), rng.random(100), B=199, seed=t).rejects(0.05)
        assert 2 <= rejections <= 20

    def test_power_quadratic(self):
        rejections = 0
        for t in range(200):
            rng = np.random.default_rng([12, t])
            x = rng.uniform(-1, 1, 100)
            y = x**2 + 0.1 * rng.standard_normal(100)
            rejections += permutation_test("hsic", x, y, B=199, seed=t).rejects(0.05)
        assert rejections >= 190
