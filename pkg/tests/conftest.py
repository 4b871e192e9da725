import numpy as np
import pytest

from raggededge.dataio import MACRO_VARIABLES, AnnualTarget, MacroSeries, Panel, SviSeries


def build_panel(
    countries=("AA", "BB"),
    years=range(2010, 2016),
    topics=("alpha", "beta"),
    svi_values=None,
    target_values=None,
    interpolated=(),
):
    """Hand-built panel with controllable values for unit tests.

    ``svi_values(country, topic)`` returns the full monthly array;
    ``target_values(country, year)`` the annual target.  Defaults are
    deterministic ramps.
    """
    n_months = 12 * len(years)
    if svi_values is None:
        def svi_values(country, topic):
            base = 10.0 * (1 + list(topics).index(topic))
            return np.clip(base + np.arange(n_months) % 12, 0, 100)

    if target_values is None:
        def target_values(country, year):
            return 100.0 + (year - years[0]) * 10.0

    targets = {}
    svi = {}
    macros = {}
    for country in countries:
        for year in years:
            flag = (country, year) in interpolated
            targets[(country, year)] = AnnualTarget(
                country, year, float(target_values(country, year)), flag
            )
        for topic in topics:
            values = np.asarray(svi_values(country, topic), dtype=float)
            svi[(country, topic)] = SviSeries(country, topic, years[0], values[None, :])
        for k, var in enumerate(MACRO_VARIABLES):
            macros[(country, var)] = MacroSeries(
                country, var, {y: 50.0 + k + 0.5 * (y - years[0]) for y in years}
            )
    panel = Panel(sorted(countries), years, targets, svi, macros)
    panel.validate()
    return panel


@pytest.fixture
def tiny_panel():
    return build_panel()


@pytest.fixture
def gapped_panel():
    # BB's 2013 target came from a gap and was linearly interpolated upstream
    return build_panel(interpolated=((("BB", 2013)),))
