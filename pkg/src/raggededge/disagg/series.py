"""Monthly series produced by the disaggregation methods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METHODS = ("chow_lin", "sp_td", "nn_elasticity", "corrupted_input")


class DisaggregationError(ValueError):
    pass


@dataclass
class MonthlySeries:
    """Monthly estimates carrying their annual anchors.

    ``values`` runs January of ``start_year`` through December of the last
    year.  For every method except the raw corrupted-input decomposition the
    twelve months of each year sum to the year's anchor.
    """

    country: str
    start_year: int
    values: np.ndarray
    method: str
    annual_anchor: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.annual_anchor = np.asarray(self.annual_anchor, dtype=float)
        if self.method not in METHODS:
            raise DisaggregationError(f"unknown method {self.method!r}")
        if len(self.values) != 12 * len(self.annual_anchor):
            raise DisaggregationError("values must cover 12 months per anchor year")

    @property
    def n_years(self) -> int:
        return len(self.annual_anchor)

    @property
    def years(self) -> range:
        return range(self.start_year, self.start_year + self.n_years)

    def year_values(self, year: int) -> np.ndarray:
        off = (year - self.start_year) * 12
        if off < 0 or off + 12 > len(self.values):
            raise DisaggregationError(f"year {year} not covered")
        return self.values[off : off + 12]

    def check_sums(self, rtol: float = 1e-9) -> None:
        sums = self.values.reshape(self.n_years, 12).sum(axis=1)
        rel = np.abs(sums - self.annual_anchor) / np.abs(self.annual_anchor)
        if np.any(rel > rtol):
            worst = int(np.argmax(rel))
            raise DisaggregationError(
                f"month sums violate the annual constraint in year "
                f"{self.start_year + worst} (relative error {rel[worst]:.2e})"
            )

    def to_rows(self) -> list[dict]:
        rows = []
        for i, value in enumerate(self.values):
            rows.append(
                {
                    "country": self.country,
                    "year": self.start_year + i // 12,
                    "month": i % 12 + 1,
                    "value": float(value),
                    "method": self.method,
                    "normalized": int(self.normalized),
                }
            )
        return rows
