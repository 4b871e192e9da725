import math

import numpy as np
import pytest
from scipy.integrate import quad

from raggededge.baselines import OlsRegressor
from raggededge.disagg import MonthlySeries
from raggededge.evalkit import (
    EvaluationError,
    SplitSpec,
    compare_methods,
    evaluate_configs,
    growth_rates,
    lagged_correlation,
    mape,
    rmse,
    summarize_errors,
)
from raggededge.features import Config
from raggededge.nn import MlpEnsembleRegressor
from raggededge.synthetic import SyntheticSpec, generate_synthetic_panel


class TestErrorMetrics:
    def test_identity_scores_zero(self):
        v = np.array([1.0, 2.0, 3.0])
        assert rmse(v, v) == 0.0
        assert mape(v, v) == 0.0

    def test_direct_arithmetic(self):
        assert rmse([1.0, 2.0], [1.0, 4.0]) == pytest.approx(math.sqrt(2.0))
        assert mape([1.0, 2.0], [1.0, 4.0]) == pytest.approx(25.0)

    def test_zero_truth_guard(self):
        with pytest.raises(EvaluationError, match="zero truth"):
            mape([0.0], [0.0])

    def test_empty_and_mismatched_inputs(self):
        with pytest.raises(EvaluationError):
            rmse([], [])
        with pytest.raises(EvaluationError):
            rmse([1.0], [1.0, 2.0])

    def test_matches_elementwise_recomputation(self):
        rng = np.random.default_rng(0)
        pred = rng.normal(10, 2, 50)
        truth = rng.normal(10, 2, 50)
        by_hand_rmse = math.sqrt(sum((p - t) ** 2 for p, t in zip(pred, truth)) / 50)
        by_hand_mape = sum(abs((p - t) / t) for p, t in zip(pred, truth)) / 50 * 100
        assert rmse(pred, truth) == pytest.approx(by_hand_rmse, rel=1e-12)
        assert mape(pred, truth) == pytest.approx(by_hand_mape, rel=1e-12)


class TestGrowthRates:
    def test_constant_series_grows_zero(self):
        assert np.allclose(growth_rates(np.full(10, 5.0)), 0.0)

    def test_geometric_series(self):
        values = 100.0 * 1.1 ** np.arange(8)
        assert np.allclose(growth_rates(values), 0.1)

    def test_single_element_is_empty(self):
        assert growth_rates(np.array([4.0])).size == 0

    def test_zero_denominator_guard(self):
        with pytest.raises(EvaluationError, match="denominator"):
            growth_rates(np.array([1.0, 0.0, 2.0]))

    def test_accepts_monthly_series(self):
        series = MonthlySeries("AA", 2010, np.full(12, 3.0), "sp_td", np.array([36.0]))
        assert np.allclose(growth_rates(series), 0.0)


def _t_pdf(t, df):
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
    return c * (1 + t * t / df) ** (-(df + 1) / 2)


class TestLaggedCorrelation:
    def test_exact_shift_detected(self):
        rng = np.random.default_rng(1)
        a = np.cumsum(rng.normal(size=200))
        b = np.empty_like(a)
        b[3:] = a[:-3]  # b repeats a three periods later
        b[:3] = a[:3]
        out = lagged_correlation(a, b, max_lag=6)
        assert out[0].lag == 3
        assert out[0].r > 0.999

    def test_identical_series_peak_at_zero(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=60)
        out = lagged_correlation(a, a, max_lag=3)
        assert out[0].lag == 0
        assert out[0].r == pytest.approx(1.0)
        assert out[0].p_value == 0.0

    def test_symmetry_in_arguments(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=80)
        b = np.cumsum(rng.normal(size=80))
        ab = {c.lag: c.r for c in lagged_correlation(a, b, max_lag=4)}
        ba = {c.lag: c.r for c in lagged_correlation(b, a, max_lag=4)}
        for lag in range(-4, 5):
            assert abs(ab[lag] - ba[-lag]) < 1e-12

    def test_p_value_matches_quadrature_oracle(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=40)
        b = 0.4 * a + rng.normal(size=40)
        for corr in lagged_correlation(a, b, max_lag=2):
            df = corr.n_effective - 2
            t = abs(corr.r) * math.sqrt(df / (1 - corr.r**2))
            expected, _ = quad(_t_pdf, t, np.inf, args=(df,))
            assert corr.p_value == pytest.approx(2 * expected, abs=1e-9)

    def test_p_value_monotone_in_correlation(self):
        # same n: larger |r| must give smaller p
        rng = np.random.default_rng(5)
        a = rng.normal(size=100)
        ps = []
        for mix in (0.2, 0.5, 0.9):
            b = mix * a + (1 - mix) * rng.normal(size=100)
            out = {c.lag: c for c in lagged_correlation(a, b, max_lag=0)}
            ps.append((abs(out[0].r), out[0].p_value))
        ps.sort()
        assert ps[0][1] > ps[1][1] > ps[2][1]

    def test_white_noise_rarely_flags_significance(self):
        clean = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            a = rng.normal(size=200)
            b = rng.normal(size=200)
            out = lagged_correlation(a, b, max_lag=3)
            if all(abs(c.r) < 0.2 or not c.significant for c in out):
                clean += 1
        assert clean >= 95

    def test_constant_series_rejected(self):
        with pytest.raises(EvaluationError, match="constant"):
            lagged_correlation(np.ones(30), np.arange(30.0), max_lag=2)

    def test_overlap_precondition(self):
        with pytest.raises(EvaluationError, match="overlap"):
            lagged_correlation(np.arange(5.0), np.arange(5.0), max_lag=3)


def _fast_mlp(**kw):
    base = dict(hidden_sizes=(16, 8, 8), n_members=2, max_epochs=60, patience=15,
                batch_size=32, random_state=0)
    base.update(kw)
    return MlpEnsembleRegressor(**base)


class TestEvaluateConfigs:
    def test_emits_per_country_year_errors(self):
        spec = SyntheticSpec(countries=3, start_year=2004, end_year=2015, k_s=3,
                             coefficients=[0.05, 0.03, 0.02], ar_rho=0.3,
                             noise_sigma=0.3)
        panel, _ = generate_synthetic_panel(spec, seed=0)
        frame = evaluate_configs(
            panel, configs=[Config.LAG_RD], split=SplitSpec(test_years=3),
            mlp=_fast_mlp(), ols=OlsRegressor(fallback_ridge=1e-8),
        )
        assert set(frame["family"]) == {"mlp", "ols"}
        assert len(frame) == 2 * 3 * 3  # families x countries x test years
        assert (frame["year"] >= 2013).all()
        summary = summarize_errors(frame)
        assert set(summary.columns) == {"config", "family", "rmse", "mape"}

    def test_deterministic_under_seed(self):
        spec = SyntheticSpec(countries=2, start_year=2004, end_year=2013, k_s=2,
                             noise_sigma=0.3)
        panel, _ = generate_synthetic_panel(spec, seed=1)
        kwargs = dict(configs=[Config.LAG_RD], split=SplitSpec(test_years=2),
                      mlp=_fast_mlp(), ols=OlsRegressor(fallback_ridge=1e-8))
        a = evaluate_configs(panel, **kwargs)
        b = evaluate_configs(panel, **kwargs)
        assert a.equals(b)

    def test_short_panel_rejected(self):
        spec = SyntheticSpec(countries=2, start_year=2004, end_year=2009, k_s=2)
        panel, _ = generate_synthetic_panel(spec, seed=2)
        with pytest.raises(EvaluationError, match="hold out"):
            evaluate_configs(panel, configs=[Config.LAG_RD],
                             split=SplitSpec(test_years=3), mlp=_fast_mlp())


class TestCompareMethods:
    def test_pairwise_report(self):
        rng = np.random.default_rng(6)
        base = rng.uniform(5, 10, 36)
        a = MonthlySeries("AA", 2010, base, "chow_lin", base.reshape(3, 12).sum(axis=1))
        noisy = base + rng.normal(0, 0.1, 36)
        b = MonthlySeries("AA", 2010, noisy, "sp_td", noisy.reshape(3, 12).sum(axis=1))
        frame = compare_methods([a, b])
        assert len(frame) == 1
        assert frame.loc[0, "r_level"] > 0.9
        assert frame.loc[0, "n_months"] == 36

    def test_disjoint_series_rejected(self):
        a = MonthlySeries("AA", 2010, np.ones(12) + np.arange(12), "chow_lin",
                          np.array([78.0]))
        b = MonthlySeries("AA", 2015, np.ones(12) + np.arange(12), "sp_td",
                          np.array([78.0]))
        with pytest.raises(EvaluationError, match="overlap"):
            compare_methods([a, b])
