import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentcl.errors import InvalidDensityError
from latentcl.taskgen import (
    EnsembleConfig,
    gen_correlated_gate,
    gen_gate,
    gen_task_pair,
    sample_latents,
    substream,
)


def cfg(rho_a=0.5, rho_b=0.5, seed=0, n_s=30, n_x=3000, n_y=10):
    return EnsembleConfig(n_s=n_s, n_x=n_x, n_y=n_y, rho_a=rho_a, rho_b=rho_b, seed=seed)


def entry_corr(x, y):
    x, y = x.ravel(), y.ravel()
    return float(np.mean(x * y) / np.sqrt(np.mean(x * x) * np.mean(y * y)))


class TestConfig:
    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            EnsembleConfig(n_s=10, n_x=5, n_y=1, rho_a=0.5, rho_b=0.5, seed=0)

    @given(st.floats(min_value=1.0001, max_value=5.0))
    def test_rejects_out_of_range_similarity(self, rho):
        with pytest.raises(ValueError):
            EnsembleConfig(n_s=2, n_x=4, n_y=1, rho_a=rho, rho_b=0.0, seed=0)


class TestGenTaskPair:
    def test_full_keep_copies_exactly(self):
        tp = gen_task_pair(cfg(rho_a=1.0, rho_b=1.0))
        np.testing.assert_array_equal(tp.a1, tp.a2)
        np.testing.assert_array_equal(tp.b1, tp.b2)

    def test_independent_at_zero(self):
        tp = gen_task_pair(cfg(rho_a=0.0))
        assert abs(entry_corr(tp.a1, tp.a2)) <= 4.0 / np.sqrt(3000 * 30)

    def test_intermediate_correlation(self):
        tp = gen_task_pair(cfg(rho_a=0.5))
        assert abs(entry_corr(tp.a1, tp.a2) - 0.5) <= 4.0 / np.sqrt(3000 * 30)

    def test_same_seed_bit_identical(self):
        tp1 = gen_task_pair(cfg(seed=123))
        tp2 = gen_task_pair(cfg(seed=123))
        assert np.array_equal(tp1.a2, tp2.a2) and np.array_equal(tp1.b2, tp2.b2)

    def test_different_seeds_differ(self):
        assert not np.array_equal(gen_task_pair(cfg(seed=1)).a1,
                                  gen_task_pair(cfg(seed=2)).a1)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1.0), st.integers(0, 1000))
    def test_resample_preserves_marginal_variance(self, rho_a, seed):
        tp = gen_task_pair(cfg(rho_a=rho_a, seed=seed, n_s=20, n_x=1000))
        pooled = tp.a2.ravel()
        assert abs(pooled.mean()) < 4.0 / np.sqrt(pooled.size * 20)
        assert abs(pooled.var() * 20 - 1.0) < 0.05

    def test_marginal_variance_pooled_over_seeds(self):
        pooled = np.concatenate([
            gen_task_pair(cfg(rho_a=0.7, seed=s, n_s=10, n_x=500)).a2.ravel()
            for s in range(10)])
        assert abs(pooled.var() - 1.0 / 10) <= 0.05 / 10


class TestGates:
    def test_full_density_is_all_ones(self):
        g = gen_gate(100, 1.0, substream(0, 50))
        assert g.active == 100

    def test_popcount_within_binomial_bounds(self):
        g = gen_gate(3000, 0.5, substream(1, 50))
        assert 1390 <= g.active <= 1610

    def test_mean_density_over_draws(self):
        rng = substream(2, 50)
        dens = np.mean([gen_gate(3000, 0.75, rng).active / 3000 for _ in range(100)])
        assert abs(dens - 0.75) <= 0.01

    def test_zero_density_rejected(self):
        with pytest.raises(InvalidDensityError):
            gen_gate(10, 0.0, substream(0, 50))

    def test_correlated_gate_identity_and_fresh(self):
        rng = substream(3, 50)
        g1 = gen_gate(2000, 0.5, rng)
        same = gen_correlated_gate(g1, 1.0, 0.5, rng)
        np.testing.assert_array_equal(same.bits, g1.bits)
        fresh = gen_correlated_gate(g1, 0.0, 0.5, rng)
        overlap = np.mean(fresh.bits == g1.bits)
        assert 0.4 <= overlap <= 0.6

    def test_effective_overlap_matches_prediction(self):
        # P(both gates active) / alpha estimates rho_g + (1 - rho_g) alpha.
        rng = substream(4, 50)
        alpha, rho_g = 0.5, 0.5
        est = []
        for _ in range(100):
            g1 = gen_gate(3000, alpha, rng)
            g2 = gen_correlated_gate(g1, rho_g, alpha, rng)
            est.append(np.count_nonzero(g1.bits & g2.bits) / (alpha * 3000))
        assert abs(np.mean(est) - 0.75) <= 0.01


class TestLatents:
    def test_column_mean_concentrates(self):
        s = sample_latents(5, 100_000, substream(5, 60))
        assert np.abs(s.mean(axis=1)).max() <= 0.02

    def test_covariance_close_to_identity(self):
        s = sample_latents(6, 10_000, substream(6, 60))
        cov = s @ s.T / s.shape[1]
        assert np.abs(cov - np.eye(6)).max() <= 0.05

    def test_deterministic_repeat(self):
        a = sample_latents(4, 100, substream(7, 60))
        b = sample_latents(4, 100, substream(7, 60))
        np.testing.assert_array_equal(a, b)

    def test_needs_positive_count(self):
        with pytest.raises(ValueError):
            sample_latents(3, 0, substream(8, 60))
