"""Perturbation-based expected elasticity of predictions to one topic.

All lag columns of the topic are scaled jointly by (1 + delta) with small
normal perturbations; the relative prediction change divided by delta is
averaged over draws and then over the country's training rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..features import Config, FeatureMatrix
from .kernelshap import ExplainError, _predict_fn

_MIN_DELTA = 1e-4
_MIN_PRED = 1e-12


@dataclass
class ElasticityEstimate:
    value: float
    n_rows_used: int
    n_excluded: int


@dataclass
class ElasticityTable:
    entries: dict[tuple[str, str], float] = field(default_factory=dict)
    excluded: dict[tuple[str, str], int] = field(default_factory=dict)
    n_draws: int = 64
    perturb_mean: float = 0.01
    perturb_std: float = 0.005

    def get(self, country: str, topic: str) -> float:
        return self.entries[(country, topic)]


def _draws(rng: np.random.Generator, n: int, mean: float, std: float) -> np.ndarray:
    out = rng.normal(mean, std, n)
    for i in range(n):  # deterministic redraw of near-zero relative changes
        while abs(out[i]) < _MIN_DELTA:
            out[i] = rng.normal(mean, std)
    return out


def expected_elasticity(
    model,
    matrix: FeatureMatrix,
    country: str,
    topic: str,
    n_draws: int = 64,
    perturb_mean: float = 0.01,
    perturb_std: float = 0.005,
    seed: int = 0,
) -> ElasticityEstimate:
    """Expected elasticity of the prediction to one topic for one country."""
    if Config(matrix.config) is not Config.AGT:
        raise ExplainError("elasticities are defined on the AGT configuration")
    if n_draws < 1:
        raise ExplainError("n_draws must be >= 1")
    predict = _predict_fn(model)
    cols = matrix.column_indices(symbol="SVI_annual_lag", topic_or_variable=topic)
    if len(cols) == 0:
        raise ExplainError(f"topic {topic!r} not present in the matrix")
    mask = matrix.rows_mask(country=country)
    if not mask.any():
        raise ExplainError(f"no rows for country {country!r}")

    X = matrix.X[mask]
    y0 = np.asarray(predict(X), dtype=float)
    zero_pred = y0 <= _MIN_PRED
    zero_feat = np.all(X[:, cols] == 0.0, axis=1)
    keep = ~(zero_pred | zero_feat)
    n_excluded = int((~keep).sum())
    if not keep.any():
        raise ExplainError(
            f"every row excluded for ({country}, {topic}): "
            f"{int(zero_pred.sum())} non-positive predictions, "
            f"{int(zero_feat.sum())} all-zero topic rows"
        )
    X = X[keep]
    y0 = y0[keep]

    rng = np.random.default_rng(seed)
    deltas = _draws(rng, n_draws, perturb_mean, perturb_std)
    per_row = np.zeros(len(X))
    for delta in deltas:
        Xp = X.copy()
        Xp[:, cols] *= 1.0 + delta
        yp = np.asarray(predict(Xp), dtype=float)
        per_row += ((yp - y0) / y0) / delta
    per_row /= n_draws
    return ElasticityEstimate(float(per_row.mean()), int(keep.sum()), n_excluded)


def elasticity_table(
    model,
    matrix: FeatureMatrix,
    n_draws: int = 64,
    perturb_mean: float = 0.01,
    perturb_std: float = 0.005,
    seed: int = 0,
) -> ElasticityTable:
    """Expected elasticities for every (country, topic) pair in the matrix."""
    countries = sorted(set(matrix.row_countries))
    topics = sorted(
        {m.topic_or_variable for m in matrix.columns if m.symbol == "SVI_annual_lag"}
    )
    table = ElasticityTable(
        n_draws=n_draws, perturb_mean=perturb_mean, perturb_std=perturb_std
    )
    for i, country in enumerate(countries):
        for j, topic in enumerate(topics):
            est = expected_elasticity(
                model,
                matrix,
                country,
                topic,
                n_draws=n_draws,
                perturb_mean=perturb_mean,
                perturb_std=perturb_std,
                seed=seed + 1000 * i + j,
            )
            table.entries[(country, topic)] = est.value
            table.excluded[(country, topic)] = est.n_excluded
    return table
