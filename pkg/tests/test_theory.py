import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentcl import theory
from latentcl.theory import Prediction, SimilarityPoint

unit = st.floats(min_value=0.0, max_value=1.0)
unit_open = st.floats(min_value=0.01, max_value=1.0)


def pt(ra, rb):
    return SimilarityPoint(ra, rb)


class TestVanilla:
    @pytest.mark.parametrize("ra,rb,tf,rt", [
        (0.0, 0.7, 0.0, 1.0),
        (1.0, 1.0, 1.0, 1.0),
        (1.0, 0.0, -1.0, -1.0),
    ])
    def test_reference_points(self, ra, rb, tf, rt):
        pred = theory.vanilla(pt(ra, rb))
        assert pred.transfer == pytest.approx(tf)
        assert pred.retention == pytest.approx(rt)

    @given(unit)
    def test_zero_feature_similarity_retains_everything(self, rb):
        assert theory.vanilla(pt(0.0, rb)).retention == 1.0

    @given(unit, unit)
    def test_retention_bounded_above(self, ra, rb):
        assert theory.vanilla(pt(ra, rb)).retention <= 1.0 + 1e-12


class TestGated:
    @given(unit, unit)
    def test_full_density_equals_vanilla(self, ra, rb):
        g = theory.gated(1.0, pt(ra, rb))
        v = theory.vanilla(pt(ra, rb))
        assert g.transfer == v.transfer and g.retention == v.retention

    def test_half_density_transfer(self):
        assert theory.gated(0.5, pt(1.0, 0.5)).transfer == pytest.approx(0.25)

    def test_sparse_limit_retains(self):
        assert theory.gated(1e-6, pt(0.9, 0.3)).retention == pytest.approx(1.0, abs=1e-5)

    def test_validity_flag_marks_sparse_regime(self):
        assert not theory.gated(0.05, pt(0.5, 0.5), n_s=30, n_x=3000).valid
        assert theory.gated(0.5, pt(0.5, 0.5), n_s=30, n_x=3000).valid

    @given(unit, unit)
    def test_transfer_maximized_at_optimal_alpha(self, ra, rb):
        p = pt(ra, rb)
        best = theory.optimal_alpha_transfer(p)
        top = theory.gated(best, p).transfer if best > 0 else 0.0
        grid = np.linspace(1e-3, 1.0, 1000)
        values = [theory.gated(a, p).transfer for a in grid]
        assert top >= max(values) - 1e-6


class TestOptimalAlpha:
    def test_reference_points(self):
        assert theory.optimal_alpha_transfer(pt(1.0, 0.5)) == pytest.approx(0.5)
        assert theory.optimal_alpha_transfer(pt(0.3, 0.9)) == 1.0
        assert theory.optimal_alpha_transfer(pt(0.0, 0.4)) == 1.0

    def test_average_transfer_optimum(self):
        assert theory.optimal_alpha_average_transfer() == 0.75
        grid = np.arange(0.0, 1.0 + 1e-9, 1e-4)
        avg = grid / 2.0 - grid ** 2 / 3.0
        assert abs(grid[np.argmax(avg)] - 0.75) <= 1e-3
        at_opt = theory.gated_prior_average(0.75)[0]
        assert at_opt == pytest.approx(0.1875)
        assert at_opt > 1.0 / 6.0


class TestAdaptiveAlphaEff:
    def test_identical_tasks_reuse_fully(self):
        for alpha in (0.1, 0.5, 0.9):
            assert theory.adaptive_alpha_eff(alpha, pt(1.0, 1.0)) == pytest.approx(1.0)

    def test_negative_probe_keeps_alpha(self):
        assert theory.adaptive_alpha_eff(0.4, pt(0.8, 0.2)) == 0.4

    def test_mid_point_value(self):
        # alpha + (1 - alpha) rho_a (2 rho_b - rho_a) = 0.5 + 0.5 * 0.25
        assert theory.adaptive_alpha_eff(0.5, pt(0.5, 0.5)) == pytest.approx(0.625)

    @given(unit_open, unit, unit)
    def test_never_below_alpha(self, alpha, ra, rb):
        assert theory.adaptive_alpha_eff(alpha, pt(ra, rb)) >= alpha - 1e-15


class TestEuclid:
    @given(unit, unit)
    def test_gamma_one_is_vanilla(self, ra, rb):
        e = theory.euclid(1.0, pt(ra, rb))
        v = theory.vanilla(pt(ra, rb))
        assert e.transfer == v.transfer and e.retention == pytest.approx(v.retention)

    def test_frozen_limit_never_learned(self):
        assert theory.euclid(1e-9, pt(0.5, 0.5)).retention == pytest.approx(0.0, abs=1e-6)

    @given(unit_open, unit, unit)
    def test_transfer_identical_to_gated_bitwise(self, gamma, ra, rb):
        assert theory.euclid(gamma, pt(ra, rb)).transfer == \
            theory.gated(gamma, pt(ra, rb)).transfer


class TestFim:
    def test_variable_feature_prediction(self):
        pred = theory.fim(pt(0.5, 0.2), n_s=30, n_x=3000)
        assert pred.retention == 1.0
        assert pred.transfer == pytest.approx(0.5 * (0.4 - 0.5))
        assert pred.valid

    def test_validity_threshold(self):
        assert not theory.fim(pt(0.99, 0.5), n_s=30, n_x=3000).valid
        assert theory.fim(pt(0.0, 0.0), n_s=30, n_x=3000).valid

    def test_fixed_feature_requires_other_entry_point(self):
        with pytest.raises(ValueError):
            theory.fim(pt(1.0, 0.5), n_s=30, n_x=3000)

    def test_fixed_feature_consistency_with_vanilla(self):
        for rb in (0.0, 0.3, 1.0):
            pred = theory.fim_fixed_feature(1.0, rb, first_task_regularized=False)
            assert pred.transfer == pytest.approx(2 * rb - 1.0)
            assert pred.retention == pytest.approx(1.0 - 2.0 * (1.0 - rb))
            reg = theory.fim_fixed_feature(1.0, rb, first_task_regularized=True)
            assert reg.retention == pytest.approx(theory.vanilla(pt(1.0, rb)).retention)

    def test_fixed_feature_reference_value(self):
        pred = theory.fim_fixed_feature(0.5, 0.5, first_task_regularized=False)
        assert pred.retention == pytest.approx(0.75)

    @given(unit_open, unit)
    def test_fixed_feature_regularized_frozen_limit(self, gamma_f, rb):
        # Retention falls to 0 as gamma_f -> 0 (first task never acquired).
        pred = theory.fim_fixed_feature(1e-9, rb, first_task_regularized=True)
        assert pred.retention == pytest.approx(0.0, abs=1e-6)


class TestUniformPriorAverage:
    def test_vanilla_constants(self):
        tf, rt = theory.uniform_prior_average(theory.vanilla, 200)
        assert abs(tf - 1.0 / 6.0) <= 1e-6
        assert abs(rt - 43.0 / 60.0) <= 1e-6

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75, 1.0])
    def test_gated_matches_closed_form(self, alpha):
        tf, rt = theory.uniform_prior_average(lambda p: theory.gated(alpha, p), 200)
        ctf, crt = theory.gated_prior_average(alpha)
        assert abs(tf - ctf) <= 1e-9
        assert abs(rt - crt) <= 1e-9

    def test_optimal_alpha_transfer_average(self):
        def opt(p):
            a = theory.optimal_alpha_transfer(p)
            tf = theory.gated(a, p).transfer if a > 0 else 0.0
            return Prediction(transfer=tf, retention=0.0)
        tf, _ = theory.uniform_prior_average(opt, 500)
        assert abs(tf - 0.25) <= 1e-6

    def test_monte_carlo_mode(self):
        rng = np.random.default_rng(0)
        tf, rt = theory.uniform_prior_average(theory.vanilla, method="monte_carlo",
                                              rng=rng, n_samples=4000)
        assert abs(tf - 1.0 / 6.0) <= 0.03
        assert abs(rt - 43.0 / 60.0) <= 0.03

    def test_polynomial_quadrature_is_machine_exact(self):
        def poly(p):
            return Prediction(transfer=p.rho_a ** 3 * p.rho_b,
                              retention=p.rho_a * p.rho_b ** 2)
        tf, rt = theory.uniform_prior_average(poly, 100)
        assert abs(tf - 1.0 / 8.0) <= 1e-9
        assert abs(rt - 1.0 / 6.0) <= 1e-9


class TestGatingPhase:
    @pytest.mark.parametrize("ra,rb,phase", [
        (0.9, 0.2, theory.PHASE_NO_BENEFIT),
        (0.8, 0.99, theory.PHASE_HIGH_ALPHA_RETENTION),
        (0.3, 0.6, theory.PHASE_TRADEOFF),
        (0.0, 0.5, theory.PHASE_TRADEOFF),
    ])
    def test_representative_points(self, ra, rb, phase):
        assert theory.gating_phase(pt(ra, rb)) == phase

    def test_boundary_ties_go_to_high_alpha(self):
        ra = 1.0 / math.sqrt(2.0)
        rb = 2.0 * math.sqrt(2.0) / 3.0
        assert theory.gating_phase(pt(ra, rb)) == theory.PHASE_HIGH_ALPHA_RETENTION

    @settings(max_examples=200)
    @given(unit, unit)
    def test_total_classification(self, ra, rb):
        assert theory.gating_phase(pt(ra, rb)) in (
            theory.PHASE_TRADEOFF, theory.PHASE_HIGH_ALPHA_RETENTION,
            theory.PHASE_NO_BENEFIT)
