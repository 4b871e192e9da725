import numpy as np
import pytest

from raggededge.explain import (
    ElasticityTable,
    ExplainError,
    elasticity_table,
    expected_elasticity,
)
from raggededge.features import Config, FeatureColumnMeta, FeatureMatrix


def _agt_matrix(svi, country="AA", extra_topics=None, lags=1):
    """Minimal AGT-config matrix: topic lag columns plus the country id."""
    svi = np.asarray(svi, dtype=float)
    n = len(svi)
    columns = [
        FeatureColumnMeta("SVI_annual_lag", "alpha", lag_years=l)
        for l in range(1, lags + 1)
    ]
    blocks = [np.tile(svi[:, None], (1, lags))]
    if extra_topics:
        for name, values in extra_topics.items():
            columns.append(FeatureColumnMeta("SVI_annual_lag", name, lag_years=1))
            blocks.append(np.asarray(values, dtype=float)[:, None])
    columns.append(FeatureColumnMeta("country_id"))
    blocks.append(np.zeros((n, 1)))
    X = np.column_stack(blocks)
    rows = [(country, 2000 + i, 0) for i in range(n)]
    return FeatureMatrix(rows, X, columns, np.ones(n), Config.AGT, lags)


class TestExpectedElasticity:
    def test_power_model_recovers_exponent(self):
        svi = np.linspace(20.0, 80.0, 12)
        matrix = _agt_matrix(svi)
        for w in (2.0, 0.5):
            model = lambda X: 3.0 * np.atleast_2d(X)[:, 0] ** w
            est = expected_elasticity(model, matrix, "AA", "alpha", n_draws=64, seed=0)
            assert est.value == pytest.approx(w, abs=0.05)
            assert est.n_excluded == 0

    def test_linear_model_has_unit_elasticity(self):
        matrix = _agt_matrix(np.linspace(10.0, 50.0, 8))
        model = lambda X: 4.0 * np.atleast_2d(X)[:, 0]
        est = expected_elasticity(model, matrix, "AA", "alpha", n_draws=16, seed=1)
        assert est.value == pytest.approx(1.0, abs=1e-10)

    def test_ignored_topic_has_zero_elasticity(self):
        matrix = _agt_matrix(
            np.linspace(10.0, 50.0, 8), extra_topics={"beta": np.linspace(5, 9, 8)}
        )
        model = lambda X: 2.0 + 3.0 * np.atleast_2d(X)[:, 1]  # beta only
        est = expected_elasticity(model, matrix, "AA", "alpha", n_draws=64, seed=2)
        assert abs(est.value) < 1e-6

    def test_joint_perturbation_over_all_lags(self):
        # model reads the topic through two lag columns; scaling both by
        # (1 + delta) keeps a power model's elasticity at its exponent
        svi = np.linspace(20.0, 60.0, 10)
        matrix = _agt_matrix(svi, lags=2)
        model = lambda X: np.atleast_2d(X)[:, 0] * np.atleast_2d(X)[:, 1]
        est = expected_elasticity(model, matrix, "AA", "alpha", n_draws=64, seed=3)
        assert est.value == pytest.approx(2.0, abs=0.05)

    def test_rescaling_invariance_with_equivalent_model(self):
        svi = np.linspace(20.0, 80.0, 12)
        w = 1.7
        est_a = expected_elasticity(
            lambda X: np.atleast_2d(X)[:, 0] ** w, _agt_matrix(svi), "AA", "alpha",
            n_draws=32, seed=4,
        )
        c = 37.5  # rescaled inputs with the functionally equivalent model
        est_b = expected_elasticity(
            lambda X: (np.atleast_2d(X)[:, 0] / c) ** w, _agt_matrix(svi * c),
            "AA", "alpha", n_draws=32, seed=4,
        )
        assert est_a.value == pytest.approx(est_b.value, abs=1e-9)

    def test_zero_feature_rows_skipped_with_count(self):
        svi = np.array([0.0, 30.0, 40.0, 0.0, 50.0])
        matrix = _agt_matrix(svi)
        model = lambda X: 2.0 * np.atleast_2d(X)[:, 0] + 1.0
        est = expected_elasticity(model, matrix, "AA", "alpha", n_draws=8, seed=5)
        assert est.n_excluded == 2
        assert est.n_rows_used == 3

    def test_non_positive_predictions_skipped(self):
        svi = np.linspace(10.0, 50.0, 6)
        matrix = _agt_matrix(svi)
        model = lambda X: np.atleast_2d(X)[:, 0] - 30.0  # some rows negative
        est = expected_elasticity(model, matrix, "AA", "alpha", n_draws=8, seed=6)
        assert est.n_excluded > 0

    def test_all_rows_excluded_is_an_error(self):
        matrix = _agt_matrix(np.zeros(4))
        model = lambda X: np.ones(len(np.atleast_2d(X)))
        with pytest.raises(ExplainError, match="every row excluded"):
            expected_elasticity(model, matrix, "AA", "alpha", n_draws=4, seed=0)

    def test_requires_agt_configuration(self):
        matrix = _agt_matrix(np.linspace(10, 20, 4))
        matrix.config = Config.ALL_VAR
        with pytest.raises(ExplainError, match="AGT"):
            expected_elasticity(lambda X: np.ones(4), matrix, "AA", "alpha")

    def test_unknown_topic_rejected(self):
        matrix = _agt_matrix(np.linspace(10, 20, 4))
        with pytest.raises(ExplainError, match="not present"):
            expected_elasticity(lambda X: np.ones(4), matrix, "AA", "gamma")

    def test_deterministic_under_seed(self):
        matrix = _agt_matrix(np.linspace(20, 60, 9))
        model = lambda X: np.atleast_2d(X)[:, 0] ** 1.3
        a = expected_elasticity(model, matrix, "AA", "alpha", n_draws=16, seed=9)
        b = expected_elasticity(model, matrix, "AA", "alpha", n_draws=16, seed=9)
        assert a.value == b.value


class TestElasticityTable:
    def test_entries_cover_all_pairs(self):
        matrix = _agt_matrix(
            np.linspace(20, 60, 9), extra_topics={"beta": np.linspace(30, 50, 9)}
        )
        model = lambda X: np.atleast_2d(X)[:, 0] + 2.0 * np.atleast_2d(X)[:, 1]
        table = elasticity_table(model, matrix, n_draws=16, seed=0)
        assert set(table.entries) == {("AA", "alpha"), ("AA", "beta")}
        assert table.n_draws == 16

    def test_get_helper(self):
        table = ElasticityTable(entries={("AA", "a"): 1.5})
        assert table.get("AA", "a") == 1.5
