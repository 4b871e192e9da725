"""Loading, validation and gap-filling of the three raw data sources.

The panel joins three CSV sources:

* annual expenditure targets (``country,year,gerd_usd_bn``, empty cell = gap),
* monthly search-volume series, one file per country/topic pair named
  ``<country>__<topic>.csv`` with columns ``year,month,sample_1..sample_N``,
* annual macro variables (``country,year,<six fixed variable columns>``).

Interior target gaps are linearly interpolated and flagged; macro gaps are
filled with the per-country mean; search-volume samples are averaged.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

MACRO_VARIABLES = (
    "gdp_pc",
    "unemployment",
    "population",
    "inflation",
    "exports",
    "imports",
)

SVI_FILE_SEP = "__"


class DataError(ValueError):
    """Raised for schema violations, bad cells, or inconsistent coverage."""


@dataclass(frozen=True)
class AnnualTarget:
    country: str
    year: int
    value: float
    is_interpolated: bool = False


@dataclass
class SviSeries:
    """Monthly search-volume series for one (country, topic) pair.

    ``samples`` has shape (n_samples, n_months); months run January of
    ``start_year`` through December of the last covered year.  ``averaged``
    is the across-sample mean per month.
    """

    country: str
    topic: str
    start_year: int
    samples: np.ndarray
    averaged: np.ndarray = field(init=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] % 12 != 0:
            raise DataError(
                f"svi {self.country}/{self.topic}: samples must cover whole years"
            )
        if np.any(self.samples < 0.0) or np.any(self.samples > 100.0):
            raise DataError(
                f"svi {self.country}/{self.topic}: value outside [0, 100]"
            )
        self.averaged = self.samples.mean(axis=0)

    @property
    def n_months(self) -> int:
        return self.samples.shape[1]

    def year_values(self, year: int) -> np.ndarray:
        """Averaged values for one calendar year, January first."""
        off = (year - self.start_year) * 12
        if off < 0 or off + 12 > self.n_months:
            raise DataError(
                f"svi {self.country}/{self.topic}: year {year} not covered"
            )
        return self.averaged[off : off + 12]


@dataclass
class MacroSeries:
    country: str
    variable: str
    values: dict[int, float]
    imputed_years: frozenset[int] = frozenset()


@dataclass
class Panel:
    """Aligned multi-country store of targets, macros and search volumes."""

    countries: list[str]
    years: range
    targets: dict[tuple[str, int], AnnualTarget]
    svi: dict[tuple[str, str], SviSeries]
    macros: dict[tuple[str, str], MacroSeries]

    @property
    def topics(self) -> list[str]:
        return sorted({topic for _, topic in self.svi})

    @property
    def start_year(self) -> int:
        return self.years[0]

    @property
    def end_year(self) -> int:
        return self.years[-1]

    def target(self, country: str, year: int) -> AnnualTarget:
        return self.targets[(country, year)]

    def svi_year(self, country: str, topic: str, year: int) -> np.ndarray:
        return self.svi[(country, topic)].year_values(year)

    def macro_value(self, country: str, variable: str, year: int) -> float:
        return self.macros[(country, variable)].values[year]

    def country_index(self, country: str) -> int:
        return self.countries.index(country)

    def validate(self) -> None:
        """Check cross-source coverage; raises DataError on violation."""
        for country in self.countries:
            for year in self.years:
                if (country, year) not in self.targets:
                    raise DataError(f"target missing for ({country}, {year})")
        for (country, topic), series in self.svi.items():
            if series.start_year != self.start_year:
                raise DataError(
                    f"svi {country}/{topic} must start in January {self.start_year}"
                )
            if series.n_months != 12 * len(self.years):
                raise DataError(
                    f"svi {country}/{topic} does not span the full year range"
                )
        for country in self.countries:
            for topic in self.topics:
                if (country, topic) not in self.svi:
                    raise DataError(f"svi missing for ({country}, {topic})")


def interpolate_gaps(
    series: dict[int, float | None],
) -> dict[int, tuple[float, bool]]:
    """Fill interior gaps of a yearly series by linear interpolation.

    Returns year -> (value, interpolated flag).  Leading/trailing gaps and
    series with fewer than two observations are rejected.
    """
    years = sorted(series)
    observed = [y for y in years if series[y] is not None]
    if len(observed) < 2:
        raise DataError("fewer than two observations")
    if years[0] not in observed or years[-1] not in observed:
        raise DataError("leading or trailing gap cannot be interpolated")

    out: dict[int, tuple[float, bool]] = {}
    for y in years:
        v = series[y]
        if v is not None:
            out[y] = (float(v), False)
            continue
        lo = max(o for o in observed if o < y)
        hi = min(o for o in observed if o > y)
        w = (y - lo) / (hi - lo)
        filled = (1.0 - w) * float(series[lo]) + w * float(series[hi])
        out[y] = (filled, True)
    return out


def _read_csv(path: str, required: list[str]) -> pd.DataFrame:
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    frame = pd.read_csv(path, comment="#")
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {missing}")
    return frame


def _numeric(frame: pd.DataFrame, col: str, path: str, allow_nan=False) -> np.ndarray:
    values = pd.to_numeric(frame[col], errors="coerce").to_numpy(dtype=float)
    if not allow_nan and np.isnan(values).any():
        bad = frame[col][np.isnan(values)].iloc[0]
        raise DataError(f"{path}: non-numeric cell {bad!r} in column {col}")
    return values


def load_panel(gerd_path: str, svi_dir: str, macro_path: str) -> Panel:
    """Load and validate the three sources into an aligned Panel."""
    gerd = _read_csv(gerd_path, ["country", "year", "gerd_usd_bn"])
    has_value = gerd["gerd_usd_bn"].notna()
    raw_values = _numeric(gerd, "gerd_usd_bn", gerd_path, allow_nan=True)
    if (has_value & np.isnan(raw_values)).any():
        raise DataError(f"{gerd_path}: non-numeric cell in column gerd_usd_bn")
    years_col = _numeric(gerd, "year", gerd_path).astype(int)

    countries = sorted(gerd["country"].astype(str).unique())
    start, end = int(years_col.min()), int(years_col.max())
    years = range(start, end + 1)

    targets: dict[tuple[str, int], AnnualTarget] = {}
    for country in countries:
        mask = (gerd["country"].astype(str) == country).to_numpy()
        series: dict[int, float | None] = {y: None for y in years}
        for year, value in zip(years_col[mask], raw_values[mask]):
            series[int(year)] = None if np.isnan(value) else float(value)
        filled = interpolate_gaps(series)
        for year, (value, flag) in filled.items():
            if value <= 0.0:
                raise DataError(
                    f"{gerd_path}: non-positive target for ({country}, {year})"
                )
            targets[(country, year)] = AnnualTarget(country, year, value, flag)

    svi = _load_svi_dir(svi_dir, countries, years)
    macros = _load_macros(macro_path, countries, years)

    panel = Panel(countries, years, targets, svi, macros)
    panel.validate()
    return panel


def _load_svi_dir(
    svi_dir: str, countries: list[str], years: range
) -> dict[tuple[str, str], SviSeries]:
    if not os.path.isdir(svi_dir):
        raise DataError(f"svi directory not found: {svi_dir}")
    svi: dict[tuple[str, str], SviSeries] = {}
    for name in sorted(os.listdir(svi_dir)):
        if not name.endswith(".csv"):
            continue
        stem = name[:-4]
        if SVI_FILE_SEP not in stem:
            raise DataError(
                f"svi file {name!r} must be named <country>{SVI_FILE_SEP}<topic>.csv"
            )
        country, topic = stem.split(SVI_FILE_SEP, 1)
        path = os.path.join(svi_dir, name)
        frame = _read_csv(path, ["year", "month"])
        sample_cols = [c for c in frame.columns if c.startswith("sample_")]
        if not sample_cols:
            raise DataError(f"{path}: no sample_N columns")
        sample_cols = sorted(sample_cols, key=lambda c: int(c.split("_")[1]))

        frame = frame.sort_values(["year", "month"]).reset_index(drop=True)
        yr = _numeric(frame, "year", path).astype(int)
        mo = _numeric(frame, "month", path).astype(int)
        expect_yr = np.repeat(np.arange(years[0], years[-1] + 1), 12)
        expect_mo = np.tile(np.arange(1, 13), len(years))
        if len(yr) != len(expect_yr) or np.any(yr != expect_yr) or np.any(mo != expect_mo):
            raise DataError(
                f"{path}: months not contiguous over {years[0]}-{years[-1]} "
                "(must start in January of the first panel year)"
            )
        samples = np.stack([_numeric(frame, c, path) for c in sample_cols])
        if np.any(samples < 0.0) or np.any(samples > 100.0):
            raise DataError(f"{path}: search-volume value outside [0, 100]")
        svi[(country, topic)] = SviSeries(country, topic, years[0], samples)
    if not svi:
        raise DataError(f"no svi files found in {svi_dir}")
    return svi


def _load_macros(
    macro_path: str, countries: list[str], years: range
) -> dict[tuple[str, str], MacroSeries]:
    frame = _read_csv(macro_path, ["country", "year", *MACRO_VARIABLES])
    yr = _numeric(frame, "year", macro_path).astype(int)
    macros: dict[tuple[str, str], MacroSeries] = {}
    for country in countries:
        mask = (frame["country"].astype(str) == country).to_numpy()
        for var in MACRO_VARIABLES:
            col = pd.to_numeric(frame[var][mask], errors="coerce").to_numpy(dtype=float)
            nonnum = frame[var][mask].notna().to_numpy() & np.isnan(col)
            if nonnum.any():
                raise DataError(f"{macro_path}: non-numeric cell in column {var}")
            values: dict[int, float] = {}
            observed = []
            for year, value in zip(yr[mask], col):
                if not np.isnan(value):
                    values[int(year)] = float(value)
                    observed.append(float(value))
            if not observed:
                raise DataError(
                    f"{macro_path}: no observations for ({country}, {var})"
                )
            mean = float(np.mean(observed))
            imputed = frozenset(y for y in years if y not in values)
            for y in imputed:
                values[y] = mean
            macros[(country, var)] = MacroSeries(country, var, values, imputed)
    return macros


def _fmt(value: float) -> str:
    return repr(float(value))


def write_panel(panel: Panel, gerd_path: str, svi_dir: str, macro_path: str) -> None:
    """Persist a Panel back to the three CSV schemas.

    Interpolated targets and imputed macro years are written as empty cells,
    so reloading reproduces the same flags and (deterministic) fills.
    """
    rows = []
    for country in panel.countries:
        for year in panel.years:
            t = panel.target(country, year)
            rows.append(
                {
                    "country": country,
                    "year": year,
                    "gerd_usd_bn": "" if t.is_interpolated else _fmt(t.value),
                }
            )
    pd.DataFrame(rows).to_csv(gerd_path, index=False)

    os.makedirs(svi_dir, exist_ok=True)
    for (country, topic), series in sorted(panel.svi.items()):
        n_samples = series.samples.shape[0]
        data = {"year": np.repeat(list(panel.years), 12),
                "month": np.tile(np.arange(1, 13), len(panel.years))}
        for s in range(n_samples):
            data[f"sample_{s + 1}"] = [_fmt(v) for v in series.samples[s]]
        path = os.path.join(svi_dir, f"{country}{SVI_FILE_SEP}{topic}.csv")
        pd.DataFrame(data).to_csv(path, index=False)

    rows = []
    for country in panel.countries:
        for year in panel.years:
            row = {"country": country, "year": year}
            for var in MACRO_VARIABLES:
                series = panel.macros[(country, var)]
                row[var] = "" if year in series.imputed_years else _fmt(series.values[year])
            rows.append(row)
    pd.DataFrame(rows).to_csv(macro_path, index=False)


def panels_equal(a: Panel, b: Panel) -> bool:
    """Structural equality, with exact float comparison."""
    if a.countries != b.countries or list(a.years) != list(b.years):
        return False
    if set(a.targets) != set(b.targets) or set(a.svi) != set(b.svi):
        return False
    if set(a.macros) != set(b.macros):
        return False
    for key, ta in a.targets.items():
        tb = b.targets[key]
        if (ta.value, ta.is_interpolated) != (tb.value, tb.is_interpolated):
            return False
    for key, sa in a.svi.items():
        sb = b.svi[key]
        if sa.start_year != sb.start_year or not np.array_equal(sa.samples, sb.samples):
            return False
    for key, ma in a.macros.items():
        mb = b.macros[key]
        if ma.values != mb.values or ma.imputed_years != mb.imputed_years:
            return False
    return True
