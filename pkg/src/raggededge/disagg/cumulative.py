"""Month attribution by differencing predictions on cumulative inputs.

A companion model is trained on search-volume features aggregated by
yearly *sums* (including the current year) rather than yearly means.  At
inference the current-year sum is rebuilt month by month: the prediction
difference between inputs with m and m-1 elapsed months is that month's
estimated contribution.  Contributions telescope to the difference between
the full-year and empty-year predictions and are reported raw, with an
optional rescaling onto the annual anchor.
"""

from __future__ import annotations

import numpy as np

from ..dataio import Panel
from ..features import DEFAULT_TAU, FeatureColumnMeta, FeatureMatrix, build_month_country_block
from .series import DisaggregationError, MonthlySeries

SUM_CONFIG = "svi_yearly_sum"


def cumulative_sum_matrix(
    panel: Panel, tau: int = DEFAULT_TAU, keep_all: bool = False
) -> FeatureMatrix:
    """Training matrix with yearly-sum search volumes for lags 0..tau.

    Lag 0 is the current year's full-year sum; this matrix serves the
    contribution decomposition, not nowcasting.
    """
    if len(panel.years) < tau + 1:
        raise DisaggregationError(f"panel needs at least tau+1={tau + 1} years")
    topics = panel.topics
    metas: list[FeatureColumnMeta] = []
    for lag in range(0, tau + 1):
        metas += [
            FeatureColumnMeta("SVI_annual_lag", topic, lag_years=lag) for topic in topics
        ]
    metas += [FeatureColumnMeta("month_onehot", month_j=j) for j in range(12)]
    metas.append(FeatureColumnMeta("country_id"))

    rows, data, targets = [], [], []
    for country in panel.countries:
        cidx = panel.country_index(country)
        for year in range(panel.start_year + tau, panel.end_year + 1):
            target = panel.target(country, year)
            if target.is_interpolated and not keep_all:
                continue
            sums = np.concatenate(
                [
                    [panel.svi_year(country, topic, year - lag).sum() for topic in topics]
                    for lag in range(0, tau + 1)
                ]
            )
            for j in range(12):
                rows.append((country, year, j))
                data.append(
                    np.concatenate(
                        [sums, build_month_country_block(cidx, j, len(panel.countries))]
                    )
                )
                targets.append(np.nan if target.is_interpolated else target.value)
    return FeatureMatrix(rows, np.vstack(data), metas, np.array(targets), SUM_CONFIG, tau)


def corrupted_input_disagg(
    model,
    panel: Panel,
    country: str,
    year: int,
    tau: int = DEFAULT_TAU,
    renormalize: bool = False,
) -> MonthlySeries:
    """Monthly contributions for one year from cumulative-input differences.

    ``model`` must have been trained on :func:`cumulative_sum_matrix`
    features.  The month one-hot stays fixed at the full-information month
    throughout the sweep so differences isolate the added month of data.
    """
    if year < panel.start_year + tau or year > panel.end_year:
        raise DisaggregationError(f"year {year} lacks tau={tau} years of history")
    topics = panel.topics
    monthly = np.stack(
        [panel.svi_year(country, topic, year) for topic in topics]
    )  # (k, 12) calendar order
    lagged = np.concatenate(
        [
            [panel.svi_year(country, topic, year - lag).sum() for topic in topics]
            for lag in range(1, tau + 1)
        ]
    )
    tail = build_month_country_block(
        panel.country_index(country), 0, len(panel.countries)
    )

    # row m has the first m calendar months summed into the lag-0 block
    inputs = np.empty((13, len(topics) * (tau + 1) + 13))
    for m in range(13):
        partial = monthly[:, :m].sum(axis=1)
        inputs[m] = np.concatenate([partial, lagged, tail])
    predict = model.predict if hasattr(model, "predict") else model
    preds = np.asarray(predict(inputs), dtype=float).ravel()
    contributions = np.diff(preds)

    anchor = panel.target(country, year).value
    if renormalize:
        total = contributions.sum()
        if abs(total) < 1e-12:
            raise DisaggregationError(
                "contributions sum to zero; cannot rescale onto the annual anchor"
            )
        contributions = contributions * (anchor / total)
    return MonthlySeries(
        country,
        year,
        contributions,
        "corrupted_input",
        np.array([anchor]),
        normalized=renormalize,
    )


def corrupted_input_series(
    model,
    panel: Panel,
    country: str,
    tau: int = DEFAULT_TAU,
    renormalize: bool = False,
) -> MonthlySeries:
    """Concatenate per-year decompositions over all years with history."""
    years = range(panel.start_year + tau, panel.end_year + 1)
    parts = [
        corrupted_input_disagg(model, panel, country, year, tau, renormalize)
        for year in years
    ]
    return MonthlySeries(
        country,
        years[0],
        np.concatenate([p.values for p in parts]),
        "corrupted_input",
        np.concatenate([p.annual_anchor for p in parts]),
        normalized=renormalize,
    )
