"""Synthetic panels with a known monthly data-generating process.

The generator fabricates search-volume series, macro variables and a latent
monthly target whose yearly sums become the annual targets.  Because the
latent series is returned alongside the panel, downstream estimates can be
scored against exact ground truth.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataio import MACRO_VARIABLES, AnnualTarget, DataError, MacroSeries, Panel, SviSeries

DGP_TYPES = ("linear", "loglinear", "random_walk")


@dataclass
class SyntheticSpec:
    countries: list[str]
    start_year: int
    end_year: int
    k_s: int
    dgp_type: str = "linear"
    coefficients: list[float] | None = None
    intercept: float = 5.0
    ar_rho: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.countries, int):
            self.countries = [f"C{i:02d}" for i in range(self.countries)]
        if not self.countries:
            raise DataError("invalid spec: zero countries")
        if self.end_year < self.start_year:
            raise DataError("invalid spec: empty year range")
        if self.k_s < 1:
            raise DataError("invalid spec: k_s must be >= 1")
        if self.dgp_type not in DGP_TYPES:
            raise DataError(f"invalid spec: unknown dgp type {self.dgp_type!r}")
        if not -1.0 < self.ar_rho < 1.0:
            raise DataError("invalid spec: ar_rho must lie in (-1, 1)")
        if self.coefficients is not None and len(self.coefficients) != self.k_s:
            raise DataError("invalid spec: coefficients must have length k_s")

    @classmethod
    def from_json(cls, doc: dict) -> "SyntheticSpec":
        dgp = doc.get("dgp", {})
        return cls(
            countries=doc["countries"],
            start_year=int(doc["start_year"]),
            end_year=int(doc["end_year"]),
            k_s=int(doc["k_s"]),
            dgp_type=dgp.get("type", "linear"),
            coefficients=dgp.get("coefficients"),
            intercept=float(dgp.get("intercept", 5.0)),
            ar_rho=float(dgp.get("ar_rho", 0.0)),
            noise_sigma=float(dgp.get("noise_sigma", 0.0)),
            seed=int(doc.get("seed", 0)),
        )

    def to_json(self) -> dict:
        return {
            "countries": list(self.countries),
            "start_year": self.start_year,
            "end_year": self.end_year,
            "k_s": self.k_s,
            "dgp": {
                "type": self.dgp_type,
                "coefficients": self.coefficients,
                "intercept": self.intercept,
                "ar_rho": self.ar_rho,
                "noise_sigma": self.noise_sigma,
            },
            "seed": self.seed,
        }


def load_spec(path: str) -> SyntheticSpec:
    with open(path) as fh:
        return SyntheticSpec.from_json(json.load(fh))


def _ar1_noise(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    if sigma == 0.0:
        return np.zeros(n)
    u = np.empty(n)
    u[0] = rng.normal(0.0, sigma / np.sqrt(1.0 - rho**2)) if rho != 0.0 else rng.normal(0.0, sigma)
    for t in range(1, n):
        u[t] = rho * u[t - 1] + rng.normal(0.0, sigma)
    return u


def _svi_values(rng: np.random.Generator, n_months: int) -> np.ndarray:
    base = rng.uniform(30.0, 60.0)
    amp = rng.uniform(5.0, 20.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    slope = rng.uniform(-0.5, 0.5)
    months = np.arange(n_months)
    values = (
        base
        + amp * np.sin(2.0 * np.pi * months / 12.0 + phase)
        + slope * months / 12.0
        + rng.normal(0.0, 2.0, n_months)
    )
    return np.clip(values, 0.0, 100.0)


def generate_synthetic_panel(
    spec: SyntheticSpec, seed: int | None = None
) -> tuple[Panel, dict[str, np.ndarray]]:
    """Build a Panel plus the latent monthly target series per country.

    Deterministic for a fixed seed; annual targets equal the exact float sum
    of the 12 corresponding latent monthly values.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    years = range(spec.start_year, spec.end_year + 1)
    n_months = 12 * len(years)
    topics = [f"topic_{k:02d}" for k in range(spec.k_s)]
    coeffs = (
        np.full(spec.k_s, 1.0 / spec.k_s)
        if spec.coefficients is None
        else np.asarray(spec.coefficients, dtype=float)
    )

    svi: dict[tuple[str, str], SviSeries] = {}
    macros: dict[tuple[str, str], MacroSeries] = {}
    targets: dict[tuple[str, int], AnnualTarget] = {}
    latents: dict[str, np.ndarray] = {}

    for country in spec.countries:
        svi_stack = np.empty((spec.k_s, n_months))
        for k, topic in enumerate(topics):
            values = _svi_values(rng, n_months)
            svi_stack[k] = values
            svi[(country, topic)] = SviSeries(
                country, topic, spec.start_year, values[None, :]
            )

        noise = _ar1_noise(rng, n_months, spec.ar_rho, spec.noise_sigma)
        if spec.dgp_type == "linear":
            latent = spec.intercept + coeffs @ svi_stack + noise
        elif spec.dgp_type == "loglinear":
            latent = spec.intercept * np.exp(coeffs @ (svi_stack / 100.0 - 0.5) + noise)
        else:  # random_walk: target carries no search-volume signal
            latent = spec.intercept * np.exp(np.cumsum(noise))
        latents[country] = latent

        for j, year in enumerate(years):
            value = float(np.sum(latent[12 * j : 12 * (j + 1)]))
            if value <= 0.0:
                raise DataError(
                    "synthetic DGP produced a non-positive annual target; "
                    "raise the intercept or lower the noise scale"
                )
            targets[(country, year)] = AnnualTarget(country, year, value)

        for var in MACRO_VARIABLES:
            base = rng.uniform(1.0, 100.0)
            growth = rng.normal(0.02, 0.01, len(years))
            levels = base * np.cumprod(1.0 + np.clip(growth, -0.5, 0.5))
            macros[(country, var)] = MacroSeries(
                country, var, {y: float(v) for y, v in zip(years, levels)}
            )

    panel = Panel(sorted(spec.countries), years, targets, svi, macros)
    panel.validate()
    return panel, latents
