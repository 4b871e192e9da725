"""Predictor blocks and configuration-specific design matrices.

Every design matrix row corresponds to one (country, year, month) triple.
The month index follows the reverse-calendar convention used throughout:
``j = 0`` is December and ``j = 11`` is January, so a row with index j
nowcasts the annual target from the vantage point of the (12 - j)-th month.

Four blocks are assembled per configuration: lagged targets with their
gap flags, yearly averages of the search-volume topics for each lag,
year-to-date search-volume averages, and lagged macro variables.  A month
one-hot and an integer country id (consumed by the network's embedding
layer) close every row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataio import MACRO_VARIABLES, Panel

DEFAULT_TAU = 3


class Config(str, Enum):
    LAG_RD = "LagRD"
    MACROS = "Macros"
    AGT = "AGT"
    MGT = "MGT"
    AGT_W_RD = "AGTwRD"
    MGT_W_RD = "MGTwRD"
    ALL_VAR = "AllVar"

    def __str__(self) -> str:  # keep CSV/CLI output the plain name
        return self.value


# blocks present per configuration, beyond the always-on month/country block
_CONFIG_BLOCKS: dict[Config, tuple[str, ...]] = {
    Config.LAG_RD: ("ar",),
    Config.MACROS: ("ar", "macro"),
    Config.AGT: ("svi_annual",),
    Config.MGT: ("svi_annual", "svi_ytd"),
    Config.AGT_W_RD: ("ar", "svi_annual"),
    Config.MGT_W_RD: ("ar", "svi_annual", "svi_ytd"),
    Config.ALL_VAR: ("ar", "svi_annual", "svi_ytd", "macro"),
}

SYMBOLS = (
    "AR_target",
    "AR_missing_flag",
    "SVI_annual_lag",
    "SVI_ytd",
    "macro_lag",
    "month_onehot",
    "country_id",
)


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureColumnMeta:
    symbol: str
    topic_or_variable: str | None = None
    lag_years: int | None = None
    month_j: int | None = None

    def __post_init__(self):
        if self.symbol not in SYMBOLS:
            raise FeatureError(f"unknown column symbol {self.symbol!r}")
        if self.lag_years is not None and self.lag_years < 0:
            raise FeatureError("lag_years must be non-negative")
        if self.month_j is not None and not 0 <= self.month_j <= 11:
            raise FeatureError("month_j must lie in [0, 11]")

    def serialize(self) -> str:
        parts = [
            self.symbol,
            self.topic_or_variable or "",
            "" if self.lag_years is None else str(self.lag_years),
            "" if self.month_j is None else str(self.month_j),
        ]
        return "|".join(parts)

    @classmethod
    def deserialize(cls, text: str) -> "FeatureColumnMeta":
        symbol, tv, lag, month = text.split("|")
        return cls(
            symbol,
            tv or None,
            int(lag) if lag else None,
            int(month) if month else None,
        )


@dataclass
class FeatureMatrix:
    rows: list[tuple[str, int, int]]  # (country, year, month_j)
    X: np.ndarray
    columns: list[FeatureColumnMeta]
    y: np.ndarray
    config: Config
    tau: int

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def row_years(self) -> np.ndarray:
        return np.array([year for _, year, _ in self.rows])

    @property
    def row_countries(self) -> list[str]:
        return [country for country, _, _ in self.rows]

    def column_indices(
        self,
        symbol: str | None = None,
        topic_or_variable: str | None = None,
        lag_years: int | None = None,
    ) -> np.ndarray:
        hits = []
        for i, meta in enumerate(self.columns):
            if symbol is not None and meta.symbol != symbol:
                continue
            if topic_or_variable is not None and meta.topic_or_variable != topic_or_variable:
                continue
            if lag_years is not None and meta.lag_years != lag_years:
                continue
            hits.append(i)
        return np.array(hits, dtype=int)

    @property
    def country_column(self) -> int:
        idx = self.column_indices(symbol="country_id")
        if len(idx) != 1:
            raise FeatureError("matrix must carry exactly one country_id column")
        return int(idx[0])

    @property
    def passthrough_mask(self) -> np.ndarray:
        """Columns that must not be standardized (one-hots and the id)."""
        return np.array(
            [meta.symbol in ("month_onehot", "country_id") for meta in self.columns]
        )

    def rows_mask(
        self, country: str | None = None, year: int | None = None, month_j: int | None = None
    ) -> np.ndarray:
        mask = np.ones(self.n_rows, dtype=bool)
        for i, (c, t, j) in enumerate(self.rows):
            if country is not None and c != country:
                mask[i] = False
            elif year is not None and t != year:
                mask[i] = False
            elif month_j is not None and j != month_j:
                mask[i] = False
        return mask

    def subset(self, mask: np.ndarray) -> "FeatureMatrix":
        idx = np.flatnonzero(mask)
        return FeatureMatrix(
            [self.rows[i] for i in idx],
            self.X[idx],
            self.columns,
            self.y[idx],
            self.config,
            self.tau,
        )

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["country", "year", "month_j", "target"]
            header += [meta.serialize() for meta in self.columns]
            writer.writerow(header)
            for (country, year, j), target, xrow in zip(self.rows, self.y, self.X):
                writer.writerow(
                    [country, year, j, repr(float(target))]
                    + [repr(float(v)) for v in xrow]
                )


def build_ar_block(panel: Panel, country: str, year: int, tau: int) -> np.ndarray:
    """Lagged targets followed by their 0/1 gap flags, most recent lag first."""
    if tau < 1:
        raise FeatureError("tau must be >= 1")
    if year - tau < panel.start_year:
        raise FeatureError(
            f"insufficient history for ({country}, {year}) at tau={tau}"
        )
    values, flags = [], []
    for lag in range(1, tau + 1):
        t = panel.target(country, year - lag)
        values.append(t.value)
        flags.append(1.0 if t.is_interpolated else 0.0)
    return np.array(values + flags)


def build_annual_svi_block(panel: Panel, country: str, year: int, tau: int) -> np.ndarray:
    """Yearly search-volume means per topic, lag-major / topic-minor."""
    if year - tau < panel.start_year:
        raise FeatureError(
            f"insufficient history for ({country}, {year}) at tau={tau}"
        )
    out = []
    for lag in range(1, tau + 1):
        for topic in panel.topics:
            out.append(panel.svi_year(country, topic, year - lag).mean())
    return np.array(out)


def build_ytd_svi_block(panel: Panel, country: str, year: int, month_j: int) -> np.ndarray:
    """Year-to-date mean per topic, excluding the nowcast month itself.

    For January (j = 11) no month has elapsed and the block is zero.
    """
    if not 0 <= month_j <= 11:
        raise FeatureError("month_j must lie in [0, 11]")
    k = len(panel.topics)
    if month_j == 11:
        return np.zeros(k)
    # elapsed months are calendar indices [0, 11 - month_j)
    n_elapsed = 11 - month_j
    out = np.empty(k)
    for i, topic in enumerate(panel.topics):
        out[i] = panel.svi_year(country, topic, year)[:n_elapsed].mean()
    return out


def build_macro_block(panel: Panel, country: str, year: int, tau: int) -> np.ndarray:
    """Lagged macro variables, lag-major / variable-minor."""
    if year - tau < panel.start_year:
        raise FeatureError(
            f"insufficient history for ({country}, {year}) at tau={tau}"
        )
    out = []
    for lag in range(1, tau + 1):
        for var in MACRO_VARIABLES:
            out.append(panel.macro_value(country, var, year - lag))
    return np.array(out)


def build_month_country_block(
    country_index: int, month_j: int, country_count: int
) -> np.ndarray:
    """12-dim month one-hot plus the integer country id column."""
    if not 0 <= month_j <= 11:
        raise FeatureError("month_j must lie in [0, 11]")
    if not 0 <= country_index < country_count:
        raise FeatureError("country index out of range")
    block = np.zeros(13)
    block[month_j] = 1.0
    block[12] = float(country_index)
    return block


def _column_metas(config: Config, tau: int, topics: list[str]) -> list[FeatureColumnMeta]:
    blocks = _CONFIG_BLOCKS[config]
    metas: list[FeatureColumnMeta] = []
    if "ar" in blocks:
        metas += [FeatureColumnMeta("AR_target", lag_years=l) for l in range(1, tau + 1)]
        metas += [FeatureColumnMeta("AR_missing_flag", lag_years=l) for l in range(1, tau + 1)]
    if "svi_annual" in blocks:
        for lag in range(1, tau + 1):
            metas += [
                FeatureColumnMeta("SVI_annual_lag", topic, lag_years=lag) for topic in topics
            ]
    if "svi_ytd" in blocks:
        metas += [FeatureColumnMeta("SVI_ytd", topic) for topic in topics]
    if "macro" in blocks:
        for lag in range(1, tau + 1):
            metas += [
                FeatureColumnMeta("macro_lag", var, lag_years=lag) for var in MACRO_VARIABLES
            ]
    metas += [FeatureColumnMeta("month_onehot", month_j=j) for j in range(12)]
    metas.append(FeatureColumnMeta("country_id"))
    return metas


def assemble(
    panel: Panel, config: Config, tau: int = DEFAULT_TAU, keep_all: bool = False
) -> FeatureMatrix:
    """Assemble the design matrix for one configuration.

    Twelve rows per (country, year) once tau years of history exist.  Rows
    whose annual target was interpolated carry no usable target; they are
    dropped unless ``keep_all`` is set, in which case their target is NaN.
    """
    config = Config(config)
    if len(panel.years) < tau + 1:
        raise FeatureError(f"panel needs at least tau+1={tau + 1} years")
    blocks = _CONFIG_BLOCKS[config]
    topics = panel.topics
    metas = _column_metas(config, tau, topics)

    rows: list[tuple[str, int, int]] = []
    data: list[np.ndarray] = []
    targets: list[float] = []
    for country in panel.countries:
        cidx = panel.country_index(country)
        for year in range(panel.start_year + tau, panel.end_year + 1):
            target = panel.target(country, year)
            if target.is_interpolated and not keep_all:
                continue
            year_parts = []
            if "ar" in blocks:
                year_parts.append(build_ar_block(panel, country, year, tau))
            if "svi_annual" in blocks:
                year_parts.append(build_annual_svi_block(panel, country, year, tau))
            year_vec = np.concatenate(year_parts) if year_parts else np.empty(0)
            macro_vec = (
                build_macro_block(panel, country, year, tau) if "macro" in blocks else None
            )
            for j in range(12):
                parts = [year_vec]
                if "svi_ytd" in blocks:
                    parts.append(build_ytd_svi_block(panel, country, year, j))
                if macro_vec is not None:
                    parts.append(macro_vec)
                parts.append(build_month_country_block(cidx, j, len(panel.countries)))
                rows.append((country, year, j))
                data.append(np.concatenate(parts))
                targets.append(np.nan if target.is_interpolated else target.value)

    X = np.vstack(data) if data else np.empty((0, len(metas)))
    y = np.array(targets)
    if X.shape[1] != len(metas):
        raise FeatureError("assembled width does not match column metadata")
    return FeatureMatrix(rows, X, metas, y, config, tau)
