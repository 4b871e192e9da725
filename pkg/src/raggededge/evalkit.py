"""Out-of-sample error metrics, config comparison and lag-correlation checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.base import clone

from .baselines import OlsRegressor
from .disagg.series import MonthlySeries
from .features import DEFAULT_TAU, Config, assemble
from .nn.estimators import MlpEnsembleRegressor

SIGNIFICANCE_LEVEL = 0.01


class EvaluationError(ValueError):
    pass


def rmse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if len(pred) == 0 or len(pred) != len(truth):
        raise EvaluationError("prediction and truth must be equal-length, non-empty")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def mape(pred, truth) -> float:
    """Mean absolute percentage error, in percent."""
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if len(pred) == 0 or len(pred) != len(truth):
        raise EvaluationError("prediction and truth must be equal-length, non-empty")
    if np.any(truth == 0.0):
        raise EvaluationError("zero truth entry makes the percentage error undefined")
    return float(np.mean(np.abs((pred - truth) / truth)) * 100.0)


def growth_rates(series) -> np.ndarray:
    """Month-over-month relative changes; empty for a single observation."""
    values = series.values if isinstance(series, MonthlySeries) else series
    values = np.asarray(values, dtype=float).ravel()
    if len(values) < 2:
        return np.empty(0)
    if np.any(values[:-1] == 0.0):
        raise EvaluationError("zero value in a growth-rate denominator")
    return np.diff(values) / values[:-1]


@dataclass
class LagCorrelation:
    lag: int
    r: float
    p_value: float
    n_effective: int

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_LEVEL


def _pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, float, int]:
    n = len(x)
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        raise EvaluationError("constant series has undefined correlation")
    r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
    r = min(1.0, max(-1.0, r))
    if abs(r) == 1.0:
        return r, 0.0, n
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stats.t.sf(abs(t), df=n - 2))
    return r, p, n


def lagged_correlation(a, b, max_lag: int) -> list[LagCorrelation]:
    """Pearson r of a against b for every lag in [-max_lag, max_lag].

    A positive lag shifts the first series backward: it pairs a's value
    from `lag` periods ago with b's current value.  Results are sorted by
    |r| descending.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n = min(len(a), len(b))
    if n < max_lag + 3:
        raise EvaluationError(
            f"series overlap {n} too short for max_lag={max_lag} (need >= {max_lag + 3})"
        )
    out = []
    for lag in range(-max_lag, max_lag + 1):
        if lag >= 0:
            xa = a[: len(a) - lag or None]
            xb = b[lag:]
        else:
            xa = a[-lag:]
            xb = b[: len(b) + lag]
        m = min(len(xa), len(xb))
        r, p, n_eff = _pearson(xa[:m], xb[:m])
        out.append(LagCorrelation(lag, r, p, n_eff))
    out.sort(key=lambda c: abs(c.r), reverse=True)
    return out


@dataclass
class SplitSpec:
    """Time-ordered holdout: the final `test_years` years per country."""

    test_years: int = 3


def evaluate_configs(
    panel,
    configs=None,
    split: SplitSpec | None = None,
    mlp: MlpEnsembleRegressor | None = None,
    ols: OlsRegressor | None = None,
    tau: int = DEFAULT_TAU,
) -> pd.DataFrame:
    """Train both model families per configuration on one split.

    Returns per-(config, family, country, test-year) errors, ready for
    box plots; the yearly prediction averages the twelve monthly rows.
    """
    configs = list(Config) if configs is None else [Config(c) for c in configs]
    split = split or SplitSpec()
    mlp = mlp if mlp is not None else MlpEnsembleRegressor()
    ols = ols if ols is not None else OlsRegressor(fallback_ridge=1e-8)

    records = []
    for config in configs:
        matrix = assemble(panel, config, tau)
        years = matrix.row_years
        unique = np.unique(years)
        if len(unique) <= split.test_years:
            raise EvaluationError(
                f"panel has only {len(unique)} usable years; "
                f"cannot hold out {split.test_years}"
            )
        cutoff = unique[-split.test_years]
        train = matrix.subset(years < cutoff)
        test = matrix.subset(years >= cutoff)

        models = {
            "mlp": clone(mlp).fit(
                train.X, train.y, columns=train.columns, years=train.row_years
            ),
            "ols": clone(ols).fit(train.X, train.y, columns=train.columns),
        }
        for family, model in models.items():
            pred = model.predict(test.X)
            frame = pd.DataFrame(
                {
                    "country": test.row_countries,
                    "year": [y for _, y, _ in test.rows],
                    "truth": test.y,
                    "pred": pred,
                }
            )
            yearly = frame.groupby(["country", "year"], as_index=False).agg(
                truth=("truth", "first"), pred=("pred", "mean")
            )
            for rec in yearly.itertuples():
                err = rec.pred - rec.truth
                records.append(
                    {
                        "config": str(config),
                        "family": family,
                        "country": rec.country,
                        "year": int(rec.year),
                        "truth": float(rec.truth),
                        "pred": float(rec.pred),
                        "abs_error": abs(float(err)),
                        "sq_error": float(err) ** 2,
                        "pct_error": abs(float(err)) / abs(float(rec.truth)) * 100.0,
                    }
                )
    return pd.DataFrame.from_records(records)


def summarize_errors(frame: pd.DataFrame) -> pd.DataFrame:
    """RMSE/MAPE per (config, family) from an evaluate_configs frame."""
    grouped = frame.groupby(["config", "family"])
    return grouped.apply(
        lambda g: pd.Series(
            {"rmse": rmse(g["pred"], g["truth"]), "mape": mape(g["pred"], g["truth"])}
        ),
        include_groups=False,
    ).reset_index()


def compare_methods(series_list: list[MonthlySeries]) -> pd.DataFrame:
    """Pairwise correlation of disaggregated series on levels and growths."""
    records = []
    for i in range(len(series_list)):
        for j in range(i + 1, len(series_list)):
            a, b = series_list[i], series_list[j]
            lo = max(a.start_year, b.start_year)
            hi = min(a.years[-1], b.years[-1])
            if hi < lo:
                raise EvaluationError(
                    f"series {a.method} and {b.method} do not overlap"
                )
            va = np.concatenate([a.year_values(y) for y in range(lo, hi + 1)])
            vb = np.concatenate([b.year_values(y) for y in range(lo, hi + 1)])
            r_level, p_level, n = _pearson(va, vb)
            try:  # growth is undefined across zero-valued months
                r_growth, p_growth, _ = _pearson(growth_rates(va), growth_rates(vb))
            except EvaluationError:
                r_growth, p_growth = float("nan"), float("nan")
            records.append(
                {
                    "method_a": a.method,
                    "method_b": b.method,
                    "r_level": r_level,
                    "p_level": p_level,
                    "r_growth": r_growth,
                    "p_growth": p_growth,
                    "n_months": n,
                }
            )
    return pd.DataFrame.from_records(records)
