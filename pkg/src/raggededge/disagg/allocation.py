"""Elasticity-weighted allocation of yearly totals over months.

Each topic's monthly share of its yearly search volume is scaled by the
topic's expected elasticity; the combined shares allocate the yearly
figure.  Years whose original target was a gap use the model nowcast as
the anchor instead of the interpolated fill.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataio import Panel
from ..explain.elasticity import ElasticityTable
from ..features import DEFAULT_TAU, Config, assemble
from .series import DisaggregationError, MonthlySeries

_DEN_TINY = 1e-12


@dataclass
class AllocationReport:
    skipped_topics: list[tuple[int, str]] = field(default_factory=list)
    nowcast_years: list[int] = field(default_factory=list)


def nn_elasticity_disagg(
    panel: Panel,
    country: str,
    elasticities: ElasticityTable,
    model=None,
    tau: int = DEFAULT_TAU,
) -> tuple[MonthlySeries, AllocationReport]:
    """Allocate every panel year of one country into monthly estimates."""
    topics = panel.topics
    for topic in topics:
        if (country, topic) not in elasticities.entries:
            raise DisaggregationError(
                f"no elasticity for ({country}, {topic}); compute the table first"
            )
    report = AllocationReport()

    nowcasts: dict[int, float] = {}
    gap_years = [
        year for year in panel.years if panel.target(country, year).is_interpolated
    ]
    if gap_years:
        if model is None:
            raise DisaggregationError(
                f"years {gap_years} need a model nowcast but no model was given"
            )
        matrix = assemble(panel, Config.AGT, tau, keep_all=True)
        for year in gap_years:
            if year < panel.start_year + tau:
                raise DisaggregationError(
                    f"cannot nowcast {year}: insufficient history at tau={tau}"
                )
            mask = matrix.rows_mask(country=country, year=year)
            nowcasts[year] = float(np.mean(model.predict(matrix.X[mask])))
        report.nowcast_years = gap_years

    values = np.empty(12 * len(panel.years))
    anchors = np.empty(len(panel.years))
    for i, year in enumerate(panel.years):
        target = panel.target(country, year)
        anchor = nowcasts[year] if target.is_interpolated else target.value
        anchors[i] = anchor

        numerator = np.zeros(12)
        for topic in topics:
            month_values = panel.svi_year(country, topic, year)
            total = month_values.sum()
            if total <= 0.0:
                report.skipped_topics.append((year, topic))
                continue
            shares = month_values / total
            numerator += elasticities.get(country, topic) * shares
        denominator = numerator.sum()
        if abs(denominator) < _DEN_TINY:
            raise DisaggregationError(
                f"elasticity-weighted shares cancel to zero in {year}; "
                "opposite-signed elasticities make the allocation undefined"
            )
        values[12 * i : 12 * (i + 1)] = anchor * numerator / denominator

    series = MonthlySeries(
        country, panel.start_year, values, "nn_elasticity", anchors, normalized=True
    )
    return series, report
