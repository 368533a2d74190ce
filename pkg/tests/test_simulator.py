import numpy as np
import pytest

from metaorders.errors import OracleIntegrityError, ParameterError
from metaorders.lmf import acf, fit_gamma
from metaorders.simulator import (
    SimConfig,
    discrete_powerlaw_cdf,
    sample_discrete_powerlaw,
    simulate,
    true_run_check,
)


class TestSampler:
    def test_cdf_normalised_and_monotone(self):
        cdf = discrete_powerlaw_cdf(1.5, 2, 1000)
        assert cdf[-1] == pytest.approx(1.0)
        assert np.all(np.diff(cdf) >= 0)

    def test_support_respected(self):
        rng = np.random.Generator(np.random.Philox(0))
        draws = sample_discrete_powerlaw(rng, 10_000, 1.5, l_min=3, l_cap=50)
        assert draws.min() >= 3 and draws.max() <= 50

    def test_pmf_matches_target(self):
        rng = np.random.Generator(np.random.Philox(1))
        draws = sample_discrete_powerlaw(rng, 200_000, 1.5, l_min=2, l_cap=100)
        support = np.arange(2, 101, dtype=float)
        target = support ** -2.5
        target /= target.sum()
        counts = np.bincount(draws, minlength=101)[2:]
        # every atom within 5 sigma of its expectation
        sd = np.sqrt(200_000 * target * (1 - target))
        assert np.all(np.abs(counts - 200_000 * target) < 5 * sd + 5)


class TestSimulate:
    def test_emits_exactly_n_orders(self):
        out = simulate(SimConfig(alpha=1.5, n_traders=5, n_orders=1234, seed=0))
        assert out.signs.size == 1234
        assert out.trader_ids.size == 1234
        assert set(np.unique(out.signs)) <= {-1, 1}

    def test_forced_unit_lengths_give_iid_coins(self):
        out = simulate(SimConfig(alpha=1.5, n_traders=1, n_orders=100_000,
                                 l_min=1, l_cap=1, seed=1))
        assert all(m.length == 1 for m in out.true_metaorders)
        est = acf(out.signs, tau_max=100)
        assert np.max(np.abs(est.values)) < 3.0 / np.sqrt(100_000)

    def test_single_metaorder_spanning_everything(self):
        m = 2000
        out = simulate(SimConfig(alpha=1.5, n_traders=1, n_orders=m, l_min=m, l_cap=m, seed=2))
        assert np.all(out.signs == out.signs[0])
        est = acf(out.signs, tau_max=50)
        assert np.all(est.values == 1.0)

    def test_truncated_final_metaorder_flagged(self):
        out = simulate(SimConfig(alpha=1.5, n_traders=1, n_orders=50, l_min=30, l_cap=40, seed=3))
        assert out.true_metaorders[-1].truncated
        assert sum(m.length for m in out.true_metaorders) == 50

    def test_deterministic_given_seed(self):
        cfg = SimConfig(alpha=1.5, n_traders=8, n_orders=5000, participation="power_law", seed=9)
        a, b = simulate(cfg), simulate(cfg)
        assert np.array_equal(a.signs, b.signs)
        assert np.array_equal(a.trader_ids, b.trader_ids)
        assert a.true_metaorders == b.true_metaorders

    def test_growing_n_orders_preserves_prefix(self):
        short = simulate(SimConfig(alpha=1.5, n_traders=6, n_orders=1000,
                                   participation="power_law", seed=4))
        long = simulate(SimConfig(alpha=1.5, n_traders=6, n_orders=2000,
                                  participation="power_law", seed=4))
        assert np.array_equal(short.signs, long.signs[:1000])
        assert np.array_equal(short.trader_ids, long.trader_ids[:1000])

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            simulate(SimConfig(alpha=1.0, n_orders=10))
        with pytest.raises(ParameterError):
            simulate(SimConfig(alpha=1.5, l_min=5, l_cap=2))
        with pytest.raises(ParameterError):
            simulate(SimConfig(alpha=1.5, participation="weird"))


class TestTrueRunCheck:
    def test_valid_output_passes(self):
        out = simulate(SimConfig(alpha=1.5, n_traders=10, n_orders=20_000,
                                 participation="power_law", seed=5))
        report = true_run_check(out)
        assert report["n_orders"] == 20_000
        assert report["n_completed"] > 0

    def test_flipped_sign_detected(self):
        out = simulate(SimConfig(alpha=1.5, n_traders=3, n_orders=5000, seed=6))
        out.signs[1234] = -out.signs[1234]
        with pytest.raises(OracleIntegrityError, match="sign mismatch|tile"):
            true_run_check(out)

    def test_length_distribution_self_test(self):
        # enough orders for ~1e5 completed metaorders
        out = simulate(SimConfig(alpha=1.5, n_traders=1, n_orders=500_000, seed=7))
        report = true_run_check(out)
        assert report["n_completed"] >= 90_000
        assert report["ks_pvalue"] > 0.01


@pytest.mark.slow
def test_gamma_estimate_converges_with_stream_length():
    """Median |gamma_hat - (alpha-1)| falls as the stream grows.

    Homogeneous participation keeps the trader-mixing curvature fixed so
    the medians track the shrinking estimation noise; under heavy-tailed
    participation the medians plateau at the mixing bias instead.
    """
    medians = []
    for m in (10_000, 100_000, 1_000_000):
        devs = []
        for seed in range(10):
            out = simulate(SimConfig(alpha=1.5, n_traders=10, n_orders=m, seed=seed))
            est = acf(out.signs, tau_max=min(1000, m // 20))
            devs.append(abs(fit_gamma(est).gamma - 0.5))
        medians.append(float(np.median(devs)))
    assert medians[0] > medians[1] > medians[2]
