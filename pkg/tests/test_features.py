import numpy as np
import pytest

from raggededge.features import (
    Config,
    FeatureColumnMeta,
    FeatureError,
    assemble,
    build_annual_svi_block,
    build_ar_block,
    build_month_country_block,
    build_ytd_svi_block,
)
from raggededge.synthetic import SyntheticSpec, generate_synthetic_panel

from conftest import build_panel


class TestArBlock:
    def test_single_lag(self, tiny_panel):
        # 2014 target is 140, observed
        block = build_ar_block(tiny_panel, "AA", 2015, tau=1)
        assert np.array_equal(block, [140.0, 0.0])

    def test_flag_placement(self, gapped_panel):
        # BB 2013 was interpolated: flags sit after all lagged values
        block = build_ar_block(gapped_panel, "BB", 2015, tau=2)
        assert np.array_equal(block, [140.0, 130.0, 0.0, 1.0])

    def test_insufficient_history(self, tiny_panel):
        with pytest.raises(FeatureError, match="insufficient history"):
            build_ar_block(tiny_panel, "AA", 2012, tau=3)


class TestAnnualSviBlock:
    def test_constant_series(self):
        panel = build_panel(topics=("alpha",), svi_values=lambda c, t: np.full(72, 50.0))
        block = build_annual_svi_block(panel, "AA", 2012, tau=1)
        assert np.allclose(block, 50.0)

    def test_calendar_mean(self):
        def ramp(country, topic):
            return np.tile(np.arange(1.0, 13.0), 6)

        panel = build_panel(topics=("alpha",), svi_values=ramp)
        block = build_annual_svi_block(panel, "AA", 2012, tau=1)
        assert block[0] == pytest.approx(6.5)

    def test_lag_major_topic_minor_order(self):
        def marked(country, topic):
            # value encodes (topic, year): topic alpha=1, beta=2; year offset added
            base = 1.0 if topic == "alpha" else 2.0
            values = np.concatenate([np.full(12, base + 10.0 * i) for i in range(6)])
            return values

        panel = build_panel(topics=("alpha", "beta"), svi_values=marked)
        block = build_annual_svi_block(panel, "AA", 2012, tau=2)
        # lag 1 = year 2011 (offset 10), lag 2 = year 2010 (offset 0)
        assert np.array_equal(block, [11.0, 12.0, 1.0, 2.0])


class TestYtdBlock:
    def test_january_is_zero(self, tiny_panel):
        block = build_ytd_svi_block(tiny_panel, "AA", 2012, month_j=11)
        assert np.array_equal(block, np.zeros(2))

    def test_february_sees_january_only(self):
        def jan80(country, topic):
            values = np.full(72, 20.0)
            values[::12] = 80.0  # every January
            return values

        panel = build_panel(topics=("alpha",), svi_values=jan80)
        block = build_ytd_svi_block(panel, "AA", 2012, month_j=10)
        assert block[0] == pytest.approx(80.0)

    def test_december_averages_jan_through_nov(self):
        def ramp(country, topic):
            return np.tile(np.arange(1.0, 13.0), 6)

        panel = build_panel(topics=("alpha",), svi_values=ramp)
        block = build_ytd_svi_block(panel, "AA", 2012, month_j=0)
        assert block[0] == pytest.approx(np.mean(np.arange(1.0, 12.0)))  # = 6

    def test_out_of_range_month(self, tiny_panel):
        with pytest.raises(FeatureError, match="month_j"):
            build_ytd_svi_block(tiny_panel, "AA", 2012, month_j=12)


class TestMonthCountryBlock:
    @pytest.mark.parametrize("j", [0, 11])
    def test_one_hot_position(self, j):
        block = build_month_country_block(0, j, 1)
        assert block[j] == 1.0
        assert block[:12].sum() == 1.0

    def test_country_id_column(self):
        block = build_month_country_block(3, 5, 8)
        assert block[12] == 3.0

    def test_range_errors(self):
        with pytest.raises(FeatureError):
            build_month_country_block(0, 12, 1)
        with pytest.raises(FeatureError):
            build_month_country_block(5, 0, 5)


def _paper_scale_panel():
    spec = SyntheticSpec(countries=2, start_year=2004, end_year=2008, k_s=57)
    panel, _ = generate_synthetic_panel(spec, seed=0)
    return panel


class TestAssemble:
    def test_lagrd_column_count(self, tiny_panel):
        matrix = assemble(tiny_panel, Config.LAG_RD, tau=3)
        assert matrix.X.shape[1] == 2 * 3 + 12 + 1  # 19

    def test_allvar_column_count_at_paper_scale(self):
        matrix = assemble(_paper_scale_panel(), Config.ALL_VAR, tau=3)
        assert matrix.X.shape[1] == 6 + 3 * 57 + 57 + 3 * 6 + 12 + 1  # 265

    def test_agt_has_no_ar_and_no_ytd(self, tiny_panel):
        matrix = assemble(tiny_panel, Config.AGT, tau=2)
        symbols = {meta.symbol for meta in matrix.columns}
        assert "AR_target" not in symbols
        assert "SVI_ytd" not in symbols
        assert "SVI_annual_lag" in symbols

    @pytest.mark.parametrize("config", list(Config))
    def test_block_bijection(self, tiny_panel, config):
        expected = {
            Config.LAG_RD: {"AR_target", "AR_missing_flag"},
            Config.MACROS: {"AR_target", "AR_missing_flag", "macro_lag"},
            Config.AGT: {"SVI_annual_lag"},
            Config.MGT: {"SVI_annual_lag", "SVI_ytd"},
            Config.AGT_W_RD: {"AR_target", "AR_missing_flag", "SVI_annual_lag"},
            Config.MGT_W_RD: {"AR_target", "AR_missing_flag", "SVI_annual_lag", "SVI_ytd"},
            Config.ALL_VAR: {
                "AR_target", "AR_missing_flag", "SVI_annual_lag", "SVI_ytd", "macro_lag",
            },
        }[config] | {"month_onehot", "country_id"}
        matrix = assemble(tiny_panel, config, tau=2)
        assert {meta.symbol for meta in matrix.columns} == expected

    def test_twelve_rows_per_country_year(self, tiny_panel):
        matrix = assemble(tiny_panel, Config.LAG_RD, tau=2)
        # 2 countries x usable years 2012..2015 x 12 months
        assert matrix.n_rows == 2 * 4 * 12

    def test_interpolated_target_rows_dropped(self, gapped_panel):
        matrix = assemble(gapped_panel, Config.LAG_RD, tau=2)
        assert matrix.n_rows == 2 * 4 * 12 - 12
        assert ("BB", 2013) not in {(c, y) for c, y, _ in matrix.rows}

    def test_keep_all_marks_excluded_targets_nan(self, gapped_panel):
        matrix = assemble(gapped_panel, Config.LAG_RD, tau=2, keep_all=True)
        assert matrix.n_rows == 2 * 4 * 12
        mask = matrix.rows_mask(country="BB", year=2013)
        assert np.all(np.isnan(matrix.y[mask]))
        assert not np.any(np.isnan(matrix.y[~mask]))

    def test_ytd_zero_for_january_rows(self, tiny_panel):
        matrix = assemble(tiny_panel, Config.MGT, tau=2)
        ytd_cols = matrix.column_indices(symbol="SVI_ytd")
        jan = matrix.rows_mask(month_j=11)
        assert np.all(matrix.X[np.ix_(jan, ytd_cols)] == 0.0)

    def test_annual_block_permutation_invariant_ytd_not(self):
        rng = np.random.default_rng(4)
        raw = {t: rng.uniform(10, 90, 72) for t in ("alpha",)}

        def svi(country, topic):
            return raw[topic]

        def svi_permuted(country, topic):
            values = raw[topic].copy()
            # permute months inside every year
            for i in range(6):
                seg = values[12 * i : 12 * (i + 1)]
                values[12 * i : 12 * (i + 1)] = seg[::-1]
            return values

        p1 = build_panel(topics=("alpha",), svi_values=svi)
        p2 = build_panel(topics=("alpha",), svi_values=svi_permuted)
        assert np.allclose(
            build_annual_svi_block(p1, "AA", 2013, 2),
            build_annual_svi_block(p2, "AA", 2013, 2),
        )
        ytd1 = build_ytd_svi_block(p1, "AA", 2013, month_j=5)
        ytd2 = build_ytd_svi_block(p2, "AA", 2013, month_j=5)
        assert not np.allclose(ytd1, ytd2)

    def test_too_short_panel(self, tiny_panel):
        with pytest.raises(FeatureError, match="tau"):
            assemble(tiny_panel, Config.LAG_RD, tau=6)

    def test_to_csv(self, tiny_panel, tmp_path):
        matrix = assemble(tiny_panel, Config.AGT, tau=2)
        path = tmp_path / "matrix.csv"
        matrix.to_csv(str(path))
        header = path.read_text().splitlines()[0]
        assert header.startswith("country,year,month_j,target,")
        assert "SVI_annual_lag|alpha|1|" in header


class TestColumnMeta:
    def test_serialize_round_trip(self):
        meta = FeatureColumnMeta("SVI_annual_lag", "alpha", lag_years=2)
        assert FeatureColumnMeta.deserialize(meta.serialize()) == meta
        onehot = FeatureColumnMeta("month_onehot", month_j=0)
        assert FeatureColumnMeta.deserialize(onehot.serialize()) == onehot

    def test_unknown_symbol_rejected(self):
        with pytest.raises(FeatureError, match="unknown column symbol"):
            FeatureColumnMeta("bogus")

    def test_negative_lag_rejected(self):
        with pytest.raises(FeatureError, match="lag_years"):
            FeatureColumnMeta("SVI_annual_lag", "a", lag_years=-1)
