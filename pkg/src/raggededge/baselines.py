"""Ordinary least squares benchmark over the same design matrices.

The solver standardizes internally for conditioning and maps the
coefficients back to the raw column scale, so ``coef_`` and ``intercept_``
always refer to the original features.  Rank-deficient designs raise unless
a small ridge penalty is enabled as fallback.
"""

from __future__ import annotations

import csv

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .features import FeatureColumnMeta


class RankDeficiencyError(ValueError):
    pass


class OlsRegressor(BaseEstimator, RegressorMixin):
    def __init__(self, standardize: bool = True, fallback_ridge: float | None = None):
        self.standardize = standardize
        self.fallback_ridge = fallback_ridge

    def fit(self, X, y, columns=None, years=None, config=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        n, d = X.shape
        if self.standardize:
            mu = X.mean(axis=0)
            sd = X.std(axis=0)
            sd[sd < 1e-12] = 1.0
        else:
            mu = np.zeros(d)
            sd = np.ones(d)
        Xs = (X - mu) / sd
        A = np.column_stack([np.ones(n), Xs])

        deficient = n < d + 1 or np.linalg.matrix_rank(A) < d + 1
        if deficient and self.fallback_ridge is None:
            raise RankDeficiencyError(
                "design is rank deficient; enable fallback_ridge to fit anyway"
            )
        if deficient:
            # ridge on the standardized coefficients, intercept unpenalized
            penalty = np.eye(d + 1) * self.fallback_ridge
            penalty[0, 0] = 0.0
            theta = np.linalg.solve(A.T @ A + penalty, A.T @ y)
            self.used_ridge_ = True
        else:
            theta, *_ = np.linalg.lstsq(A, y, rcond=None)
            self.used_ridge_ = False

        coef_std = theta[1:]
        self.coef_ = coef_std / sd
        self.intercept_ = float(theta[0] - np.dot(coef_std, mu / sd))
        self.columns_ = columns
        self.config_ = config
        self.n_features_in_ = d
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"row width {X.shape[1]} does not match fit ({self.n_features_in_})"
            )
        return X @ self.coef_ + self.intercept_

    def fit_matrix(self, matrix):
        return self.fit(
            matrix.X, matrix.y, columns=matrix.columns, config=matrix.config
        )

    def coefficients_to_csv(self, path: str) -> None:
        """Dump intercept and per-column coefficients keyed by metadata."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["column", "coefficient"])
            writer.writerow(["intercept", repr(self.intercept_)])
            for i, value in enumerate(self.coef_):
                key = (
                    self.columns_[i].serialize()
                    if self.columns_ is not None
                    else f"x{i}"
                )
                writer.writerow([key, repr(float(value))])
