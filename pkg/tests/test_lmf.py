import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaorders.errors import DataError, InsufficientDataError, ParameterError
from metaorders.lmf import (
    acf,
    classify_traders,
    default_tau_range,
    fit_alpha,
    fit_gamma,
    lmf_compare,
    run_lengths,
    sign_runs,
    GammaFit,
    PowerLawFit,
)
from metaorders.rng import substream
from metaorders.simulator import sample_discrete_powerlaw


class TestAcf:
    def test_constant_signs(self):
        est = acf(np.ones(100), tau_max=10)
        assert np.all(est.values == 1.0)

    def test_alternating_signs(self):
        s = np.array([1, -1] * 50)
        est = acf(s, tau_max=2)
        assert est.values[0] == -1.0
        assert est.values[1] == 1.0

    def test_four_sign_hand_case_exact(self):
        est = acf(np.array([1, 1, -1, 1]), tau_max=2)
        assert est.values[0] == -1.0 / 3.0  # bit-exact: integer sums over float64
        assert est.values[1] == 0.0

    def test_lag_zero_convention(self):
        # the estimator formula at tau = 0 is sum(e_l^2)/N = 1 exactly
        s = np.array([1, -1, -1, 1, 1], dtype=float)
        assert float(s @ s) / s.size == 1.0

    def test_negation_invariance(self):
        rng = substream(0, "acf-negation")
        s = rng.choice([1.0, -1.0], size=500)
        a = acf(s, tau_max=50).values
        b = acf(-s, tau_max=50).values
        assert np.array_equal(a, b)

    def test_bounded_by_one(self):
        rng = substream(1, "acf-bound")
        s = rng.choice([1.0, -1.0], size=1000)
        assert np.all(np.abs(acf(s, tau_max=100).values) <= 1.0)

    def test_tau_max_validation(self):
        with pytest.raises(ParameterError):
            acf(np.ones(10), tau_max=9)
        with pytest.raises(ParameterError):
            acf(np.ones(10), tau_max=0)

    def test_centered_variant_removes_mean(self):
        rng = substream(2, "acf-centered")
        s = np.where(rng.random(5000) < 0.8, 1.0, -1.0)  # biased signs
        raw = acf(s, tau_max=20)
        centered = acf(s, tau_max=20, centered=True)
        assert np.all(raw.values > 0.3)  # dominated by the mean
        assert np.mean(np.abs(centered.values)) < 0.1


class TestFitGamma:
    def test_exact_power_law(self):
        from metaorders.lmf import AcfEstimate

        tau = np.arange(1, 1001)
        estimate = AcfEstimate(lags=tau, values=tau.astype(float) ** -0.5, n_signs=1_000_000)
        fit = fit_gamma(estimate, tau_min=10, tau_max=1000)
        assert fit.gamma == pytest.approx(0.5, abs=1e-12)
        assert fit.half_width == pytest.approx(0.0, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0)

    def test_prefactor_absorbed(self):
        from metaorders.lmf import AcfEstimate

        tau = np.arange(1, 501)
        estimate = AcfEstimate(lags=tau, values=0.8 * tau.astype(float) ** -0.3, n_signs=100_000)
        fit = fit_gamma(estimate, tau_min=10, tau_max=500)
        assert fit.gamma == pytest.approx(0.3, abs=1e-12)
        scaled = AcfEstimate(lags=tau, values=3.0 * 0.8 * tau.astype(float) ** -0.3, n_signs=100_000)
        assert fit_gamma(scaled, tau_min=10, tau_max=500).gamma == pytest.approx(fit.gamma)

    def test_needs_positive_lags(self):
        from metaorders.lmf import AcfEstimate

        tau = np.arange(1, 101)
        values = -np.ones(100)
        values[:5] = 0.5
        estimate = AcfEstimate(lags=tau, values=values, n_signs=10_000)
        with pytest.raises(InsufficientDataError, match="5 lags"):
            fit_gamma(estimate, tau_min=1, tau_max=100)

    def test_default_range(self):
        assert default_tau_range(1_000_000) == (10, 1000)
        assert default_tau_range(4000) == (10, 200)


class TestRunLengths:
    def test_hand_cases(self):
        assert run_lengths([1, 1, -1, -1, 1]).tolist() == [2, 2, 1]
        assert run_lengths([1] * 7).tolist() == [7]
        assert sign_runs([1, 1, -1]) == [(1, 2), (-1, 1)]

    def test_lengths_tile_the_sequence(self):
        rng = substream(3, "runs")
        s = rng.choice([1, -1], size=2000)
        assert run_lengths(s).sum() == 2000

    def test_fair_coin_geometric_mean(self):
        rng = substream(4, "runs-geometric")
        s = rng.choice([1, -1], size=100_000)
        lengths = run_lengths(s)
        n = lengths.size
        assert abs(lengths.mean() - 2.0) < 3.0 * math.sqrt(2.0) / math.sqrt(n)


class TestClassifyTraders:
    def test_pure_persistence_is_st(self):
        labels = classify_traders({1: np.ones(100)})
        assert labels[1] == "ST"

    def test_iid_coins_are_rt(self):
        seqs = {k: substream(k, "rt-null").choice([1, -1], size=10_000) for k in range(10)}
        labels = classify_traders(seqs)
        assert sum(1 for v in labels.values() if v == "RT") >= 9

    def test_alternating_is_rt(self):
        labels = classify_traders({1: np.array([1, -1] * 50)})
        assert labels[1] == "RT"

    def test_short_sequences_unlabelled(self):
        labels = classify_traders({1: np.ones(10)})
        assert 1 not in labels

    def test_splitting_flow_is_st(self):
        from metaorders.simulator import SimConfig, simulate

        out = simulate(SimConfig(alpha=1.5, n_traders=1, n_orders=5000, seed=0))
        labels = classify_traders({1: out.signs})
        assert labels[1] == "ST"


class TestFitAlpha:
    def test_recovery_from_exact_sampler(self):
        rng = substream(0, "alpha-oracle")
        draws = sample_discrete_powerlaw(rng, 100_000, alpha=1.5, l_min=2, l_cap=100_000)
        fit = fit_alpha(draws)
        assert abs(fit.alpha_pdf - 2.5) < 0.05
        assert abs(fit.alpha_lmf - 1.5) < 0.05
        assert fit.x_min <= 4
        assert fit.n_tail >= 25_000
        assert not fit.thin_tail

    def test_exponent_mapping(self):
        rng = substream(1, "alpha-mapping")
        draws = sample_discrete_powerlaw(rng, 50_000, alpha=1.0, l_min=2, l_cap=100_000)
        fit = fit_alpha(draws)
        assert abs(fit.alpha_pdf - 2.0) < 0.05
        assert fit.alpha_lmf == pytest.approx(fit.alpha_pdf - 1.0)

    def test_degenerate_sample(self):
        with pytest.raises(DataError, match="degenerate"):
            fit_alpha(np.full(100, 3))

    def test_minimum_sample_size(self):
        with pytest.raises(InsufficientDataError):
            fit_alpha(np.arange(2, 30))

    def test_refit_own_model_within_3_se(self):
        hits = 0
        for rep in range(20):
            rng = substream(rep, "alpha-selfcheck")
            draws = sample_discrete_powerlaw(rng, 20_000, alpha=1.3, l_min=2, l_cap=10_000)
            fit = fit_alpha(draws)
            resampled = sample_discrete_powerlaw(rng, 20_000, alpha=fit.alpha_pdf - 1.0,
                                                 l_min=fit.x_min, l_cap=10_000)
            refit = fit_alpha(resampled)
            if abs(refit.alpha_pdf - fit.alpha_pdf) <= 3.0 * refit.std_err:
                hits += 1
        assert hits >= 19  # >= 95% nominal


class TestLmfCompare:
    def _afit(self, alpha_lmf):
        return PowerLawFit(alpha_pdf=alpha_lmf + 1, alpha_lmf=alpha_lmf, x_min=2,
                           ks_distance=0.01, n_tail=1000, std_err=0.01)

    def _gfit(self, gamma):
        return GammaFit(gamma=gamma, half_width=0.05, tau_min=10, tau_max=1000,
                        r_squared=0.99, n_lags=500)

    def test_points_on_identity_line(self):
        alphas = {f"S{i}": self._afit(1.2 + 0.1 * i) for i in range(5)}
        gammas = {f"S{i}": self._gfit(0.2 + 0.1 * i) for i in range(5)}
        cmp = lmf_compare(alphas, gammas)
        assert cmp.median_abs_dev == pytest.approx(0.0, abs=1e-12)
        assert all(r["abs_dev"] == pytest.approx(0.0, abs=1e-12) for r in cmp.rows)

    def test_single_pair_arithmetic(self):
        cmp = lmf_compare({"S": self._afit(1.5)}, {"S": self._gfit(0.4)})
        assert cmp.rows[0]["alpha_minus_1"] == pytest.approx(0.5)
        assert cmp.rows[0]["abs_dev"] == pytest.approx(0.1)
        assert cmp.median_abs_dev == pytest.approx(0.1)

    def test_unpaired_dropped(self):
        cmp = lmf_compare({"A": self._afit(1.5), "B": self._afit(1.4)}, {"A": self._gfit(0.5)})
        assert [r["stock"] for r in cmp.rows] == ["A"]
        assert cmp.dropped == ["B"]

    def test_bin_medians(self):
        alphas = {f"S{i}": self._afit(1.0 + 0.01 * i) for i in range(20)}
        gammas = {f"S{i}": self._gfit(0.7) for i in range(20)}
        cmp = lmf_compare(alphas, gammas, n_bins=4)
        finite = cmp.bin_median_gamma[np.isfinite(cmp.bin_median_gamma)]
        assert np.allclose(finite, 0.7)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from([1, -1]), min_size=12, max_size=300))
def test_acf_even_and_bounded_property(signs):
    s = np.array(signs, dtype=float)
    tau_max = min(10, s.size - 2)
    a = acf(s, tau_max=tau_max)
    b = acf(-s, tau_max=tau_max)
    assert np.array_equal(a.values, b.values)
    assert np.all(np.abs(a.values) <= 1.0)
    assert run_lengths(signs).sum() == len(signs)
