import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from missingmass.distributions import DiscreteDistribution, benchmark_distribution, draw_sample, make_distribution
from missingmass.moments import (
    MomentContext,
    covariance_phi,
    covariance_phi_mass,
    estimated_mse,
    estimator_mse,
    joint_indicator_expectation,
    minimal_bias_variance,
    minimal_bias_variance_bound,
    plugin_context,
    variance_mass,
    variance_phi,
)
from missingmass.numerics import DomainError
from missingmass.representations import LinearEstimator

U2 = make_distribution("uniform", 2, exact=True)


def as_float(dist):
    return DiscreteDistribution([float(p) for p in dist.values()])


class TestJointIndicator:
    def test_same_class_same_prefix(self):
        ctx = MomentContext(U2, 2)
        assert joint_indicator_expectation(ctx, 0, 2, 1, 0, 2, 1) == Fraction(1, 2)

    def test_infeasible(self):
        ctx = MomentContext(U2, 2)
        assert joint_indicator_expectation(ctx, 0, 2, 2, 1, 2, 1) == 0

    def test_nested_prefix(self):
        ctx = MomentContext(U2, 2)
        assert joint_indicator_expectation(ctx, 0, 2, 2, 0, 1, 1) == Fraction(1, 4)
        assert joint_indicator_expectation(ctx, 0, 1, 1, 0, 2, 2) == Fraction(1, 4)

    def test_bad_prefix(self):
        with pytest.raises(DomainError):
            joint_indicator_expectation(MomentContext(U2, 2), 0, 0, 0, 1, 1, 1)


class TestVariances:
    def test_phi_examples(self):
        ctx = MomentContext(U2, 2)
        assert variance_phi(ctx, 1, 2) == 1
        assert variance_phi(ctx, 2, 2) == Fraction(1, 4)

    def test_mass(self):
        assert variance_mass(MomentContext(U2, 2), 0) == Fraction(1, 16)

    def test_mass_k_equals_n(self):
        d = make_distribution("zipf", 2, 1, exact=True)
        p = d.values()
        # M_2 at n=2 is p_x when one class is drawn twice.
        values = {p[0]: p[0] ** 2, p[1]: p[1] ** 2}
        mean = sum(v * w for v, w in values.items())
        second = sum(v * v * w for v, w in values.items())
        assert variance_mass(MomentContext(d, 2), 2) == second - mean * mean

    def test_minimal_bias_variance_matches_generic(self, grid):
        for d in grid[:6]:
            ctx = MomentContext(d, 5)
            for k in range(5):
                assert minimal_bias_variance(ctx, k) == estimator_mse(ctx, LinearEstimator.minimal_bias(5, k), k).variance

    @given(st.integers(1, 12), st.data())
    def test_nonnegative(self, n, data):
        d = benchmark_distribution(data.draw(st.sampled_from(["zipf-1", "diri-0.5", "uniform"])), 8, seed=1)
        ctx = MomentContext(d, n)
        j = data.draw(st.integers(1, n))
        i = data.draw(st.integers(1, j))
        k = data.draw(st.integers(0, n))
        assert variance_phi(ctx, i, j) >= -1e-15
        assert variance_mass(ctx, k) >= -1e-15

    def test_covariance_symmetric(self):
        ctx = MomentContext(make_distribution("zipf", 3, 1, exact=True), 5)
        assert covariance_phi(ctx, 1, 3, 2, 5) == covariance_phi(ctx, 2, 5, 1, 3)


class TestEstimatorMse:
    def test_good_turing_small(self):
        br = estimator_mse(MomentContext(U2, 2), LinearEstimator.good_turing(2, 0), 0)
        assert br.mse == Fraction(5, 8)

    def test_zero_estimator(self):
        d = make_distribution("zipf", 3, 1, exact=True)
        ctx = MomentContext(d, 4)
        br = estimator_mse(ctx, LinearEstimator(4, 0, {}), 0)
        assert br.mse == variance_mass(ctx, 0) + ctx.mean_mass(0) ** 2

    def test_recomposition(self):
        ctx = MomentContext(benchmark_distribution("zipf-0.5", 15), 12)
        est = LinearEstimator(12, 1, {(2, 12): 0.15, (1, 7): -0.02, (3, 9): 0.05})
        br = estimator_mse(ctx, est, 1)
        total = br.bias**2 + br.variance + br.mass_variance - 2 * br.covariance
        assert br.mse == pytest.approx(total, rel=1e-12)
        assert br.mse >= br.bias**2

    def test_exact_matches_float(self, grid):
        est = LinearEstimator(5, 0, {(1, 5): Fraction(1, 4), (2, 4): Fraction(-1, 7), (1, 2): Fraction(1, 9)})
        for d in grid:
            exact = estimator_mse(MomentContext(d, 5), est, 0).mse
            approx = estimator_mse(MomentContext(as_float(d), 5), est.as_float(), 0).mse
            assert approx == pytest.approx(float(exact), rel=1e-11, abs=1e-16)

    def test_dense_matches_generic(self):
        ctx = MomentContext(benchmark_distribution("diri-1", 20, seed=4), 15)
        rng = random.Random(0)
        index = ctx.dense_index()
        cells = rng.sample(sorted(index), 6)
        betas = np.array([rng.uniform(-0.2, 0.2) for _ in cells])
        pos = np.array([index[c] for c in cells])
        est = LinearEstimator(15, 0, dict(zip(cells, betas.tolist())))
        assert ctx.fast_mse(pos, betas, 0) == pytest.approx(estimator_mse(ctx, est, 0).mse, rel=1e-10)

    def test_size_mismatch(self):
        with pytest.raises(DomainError):
            estimator_mse(MomentContext(U2, 3), LinearEstimator.good_turing(2, 0), 0)

    def test_cache(self):
        ctx = MomentContext(benchmark_distribution("uniform", 10), 10)
        estimator_mse(ctx, LinearEstimator.good_turing(10, 0).as_float(), 0)
        size = ctx.cache_size
        estimator_mse(ctx, LinearEstimator.good_turing(10, 0).as_float(), 0)
        assert ctx.cache_size == size > 0
        ctx.clear()
        assert ctx.cache_size == 0


class TestVarianceBound:
    @pytest.mark.parametrize("name", ["uniform", "half&half", "zipf-1", "zipf-0.5", "diri-1", "diri-0.5"])
    def test_holds(self, name):
        d = benchmark_distribution(name, 10, seed=0)
        for n in (5, 10, 20, 30):
            for k in (0, 1, 2):
                assert float(minimal_bias_variance(MomentContext(d, n), k)) <= minimal_bias_variance_bound(d, n, k)

    def test_uniform_value(self):
        # S * n * (1 - 1/S)**n at k = 0.
        d = benchmark_distribution("uniform", 10)
        assert minimal_bias_variance_bound(d, 20, 0) == pytest.approx(10 * 20 * 0.9**20)

    def test_degenerate(self):
        with pytest.raises(DomainError):
            minimal_bias_variance_bound(benchmark_distribution("uniform", 3), 2, 3)


class TestPublishedValues:
    @pytest.mark.parametrize("n,variance", [(100, 2.3372e-3), (500, 1.1430e-5), (1000, 4.3439e-8)])
    def test_good_turing_variance_uniform(self, n, variance):
        ctx = MomentContext(benchmark_distribution("uniform", 100), n)
        br = estimator_mse(ctx, LinearEstimator.good_turing(n, 0).as_float(), 0)
        assert br.variance == pytest.approx(variance, rel=1e-4)

    @pytest.mark.parametrize("n,variance", [(100, 2.3515e-3), (500, 1.1445e-5), (1000, 4.3441e-8)])
    def test_minimal_bias_variance_uniform(self, n, variance):
        # The printed values are about 0.6 % below the exact variance at
        # n = 100; brute-force enumeration confirms the exact figure.
        ctx = MomentContext(benchmark_distribution("uniform", 100), n)
        assert float(minimal_bias_variance(ctx, 0)) == pytest.approx(variance, rel=1e-2)

    @pytest.mark.parametrize("name,values", [
        ("uniform", (1.09e-2, 6.05e-3, 1.93e-3)),
        ("half&half", (1.14e-2, 5.46e-3, 1.57e-3)),
        ("zipf-1", (8.09e-3, 3.42e-3, 1.26e-3)),
        ("zipf-0.5", (1.08e-2, 5.23e-3, 1.73e-3)),
    ])
    def test_good_turing_true_mse(self, name, values):
        d = benchmark_distribution(name, 100)
        for n, want in zip((50, 100, 200), values):
            got = estimator_mse(MomentContext(d, n), LinearEstimator.good_turing(n, 0).as_float(), 0).mse
            assert got == pytest.approx(want, rel=1.5e-2)


class TestPlugin:
    def test_estimated_close_on_full_coverage(self):
        d = benchmark_distribution("uniform", 4)
        profile = draw_sample(d, 400, seed=17)
        assert profile.distinct() == 4
        est = LinearEstimator.good_turing(400, 0).as_float()
        truth = estimator_mse(MomentContext(d, 400), est, 0).mse
        guess = estimated_mse(profile, est, 0)
        assert guess >= 0
        assert truth / 2 <= guess <= truth * 2 or (truth < 1e-40 and guess < 1e-40)

    def test_no_unseen_block(self):
        ctx = plugin_context(draw_sample(benchmark_distribution("uniform", 3), 60, 1))
        assert ctx.dist.S == 3
        assert estimated_mse(draw_sample(benchmark_distribution("uniform", 3), 60, 1),
                             LinearEstimator.good_turing(60, 0).as_float(), 0, ctx) >= 0
