"""Scikit-learn style regressors wrapping the numpy network.

``MlpRegressor`` trains a single network; ``MlpEnsembleRegressor`` trains
ten independently initialized members on an identical split and averages
their outputs.  Continuous columns are z-scored with statistics from the
training split only; month one-hots and the country id pass through
untouched, and targets are modeled in log scale by default.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, RegressorMixin

from ..features import FeatureColumnMeta, FeatureMatrix
from .network import Architecture, NetworkError, Params, forward
from .train import History, TrainSettings, fit_network, time_ordered_split


@dataclass
class Preprocess:
    country_col: int
    feature_cols: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    log_target: bool
    country_count: int

    def split_X(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ids = np.rint(X[:, self.country_col]).astype(int)
        if np.any(ids < 0) or np.any(ids >= self.country_count):
            raise NetworkError("unknown country id")
        feats = (X[:, self.feature_cols] - self.mean) / self.scale
        return feats, ids

    def transform_y(self, y: np.ndarray) -> np.ndarray:
        return np.log(y) if self.log_target else np.asarray(y, dtype=float)

    def inverse_y(self, pred: np.ndarray) -> np.ndarray:
        return np.exp(pred) if self.log_target else pred


def _resolve_columns(
    n_cols: int, columns: list[FeatureColumnMeta] | None
) -> tuple[int, np.ndarray]:
    """Country-id column index and the passthrough mask over feature columns."""
    if columns is None:
        country_col = n_cols - 1
        passthrough = np.zeros(n_cols, dtype=bool)
    else:
        if len(columns) != n_cols:
            raise ValueError("column metadata does not match matrix width")
        idx = [i for i, m in enumerate(columns) if m.symbol == "country_id"]
        if len(idx) != 1:
            raise ValueError("need exactly one country_id column")
        country_col = idx[0]
        passthrough = np.array([m.symbol == "month_onehot" for m in columns])
    return country_col, passthrough


def _fit_preprocess(
    X: np.ndarray,
    columns: list[FeatureColumnMeta] | None,
    train_idx: np.ndarray,
    standardize: bool,
    log_target: bool,
) -> Preprocess:
    country_col, passthrough = _resolve_columns(X.shape[1], columns)
    feature_cols = np.array([i for i in range(X.shape[1]) if i != country_col])
    mean = np.zeros(len(feature_cols))
    scale = np.ones(len(feature_cols))
    if standardize:
        sub = X[np.ix_(train_idx, feature_cols)]
        keep = ~passthrough[feature_cols]
        mean[keep] = sub[:, keep].mean(axis=0)
        sd = sub[:, keep].std(axis=0)
        sd[sd < 1e-12] = 1.0  # constant columns stay untouched
        scale[keep] = sd
    ids = np.rint(X[:, country_col]).astype(int)
    if np.any(ids < 0):
        raise NetworkError("country ids must be non-negative integers")
    return Preprocess(
        country_col, feature_cols, mean, scale, log_target, int(ids.max()) + 1
    )


def _check_Xy(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if y is None:
        return X
    y = np.asarray(y, dtype=float).ravel()
    if len(y) != X.shape[0]:
        raise ValueError("X and y lengths differ")
    return X, y


class _MlpBase(BaseEstimator, RegressorMixin):
    def __init__(
        self,
        hidden_sizes=(200, 20, 20),
        embedding_dim=2,
        learning_rate=1e-3,
        weight_decay=1e-4,
        batch_size=32,
        max_epochs=2000,
        patience=50,
        validation_fraction=0.15,
        standardize=True,
        log_target=True,
        bn_momentum=0.1,
        bn_eps=1e-5,
        restore_best=True,
        random_state=0,
    ):
        self.hidden_sizes = hidden_sizes
        self.embedding_dim = embedding_dim
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.standardize = standardize
        self.log_target = log_target
        self.bn_momentum = bn_momentum
        self.bn_eps = bn_eps
        self.restore_best = restore_best
        self.random_state = random_state

    def _settings(self) -> TrainSettings:
        return TrainSettings(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            validation_fraction=self.validation_fraction,
            bn_momentum=self.bn_momentum,
            restore_best=self.restore_best,
        )

    def _prepare_fit(self, X, y, columns, years):
        X, y = _check_Xy(X, y)
        if X.shape[0] < 2:
            raise ValueError("need at least two rows to train")
        if self.log_target and np.any(y <= 0.0):
            raise ValueError("log-scale targets require strictly positive y")
        years = None if years is None else np.asarray(years)
        train_idx, val_idx = time_ordered_split(
            years, X.shape[0], self.validation_fraction
        )
        pre = _fit_preprocess(X, columns, train_idx, self.standardize, self.log_target)
        feats, ids = pre.split_X(X)
        arch = Architecture(
            n_features=feats.shape[1],
            country_count=pre.country_count,
            hidden_sizes=tuple(self.hidden_sizes),
            embedding_dim=self.embedding_dim,
            bn_eps=self.bn_eps,
        )
        if arch.hidden_sizes[0] < arch.input_dim:
            warnings.warn(
                f"first hidden layer ({arch.hidden_sizes[0]}) is undercomplete "
                f"for input width {arch.input_dim}",
                UserWarning,
                stacklevel=3,
            )
        target = pre.transform_y(y)
        return X, pre, arch, feats, ids, target, train_idx, val_idx

    def _forward_members(self, X: np.ndarray, members: list[Params]) -> np.ndarray:
        if X.shape[1] != len(self.preprocess_.feature_cols) + 1:
            raise NetworkError(
                f"row width {X.shape[1]} does not match the fitted matrix"
            )
        feats, ids = self.preprocess_.split_X(X)
        return np.stack(
            [forward(p, self.arch_, feats, ids, train=False)[0] for p in members]
        )


class MlpRegressor(_MlpBase):
    """Single network regressor (one ensemble member)."""

    def fit(self, X, y, columns=None, years=None, config=None):
        X, pre, arch, feats, ids, target, train_idx, val_idx = self._prepare_fit(
            X, y, columns, years
        )
        params, history = fit_network(
            feats, ids, target, arch, self._settings(), self.random_state, train_idx, val_idx
        )
        self.preprocess_ = pre
        self.arch_ = arch
        self.params_ = params
        self.history_ = history
        self.columns_ = columns
        self.config_ = config
        return self

    def predict(self, X):
        X = _check_Xy(X)
        return self.preprocess_.inverse_y(
            self._forward_members(X, [self.params_])[0]
        )


class MlpEnsembleRegressor(_MlpBase):
    """Average of independently initialized networks trained on one split."""

    def __init__(
        self,
        hidden_sizes=(200, 20, 20),
        embedding_dim=2,
        learning_rate=1e-3,
        weight_decay=1e-4,
        batch_size=32,
        max_epochs=2000,
        patience=50,
        validation_fraction=0.15,
        standardize=True,
        log_target=True,
        bn_momentum=0.1,
        bn_eps=1e-5,
        restore_best=True,
        random_state=0,
        n_members=10,
        n_jobs=1,
    ):
        super().__init__(
            hidden_sizes=hidden_sizes,
            embedding_dim=embedding_dim,
            learning_rate=learning_rate,
            weight_decay=weight_decay,
            batch_size=batch_size,
            max_epochs=max_epochs,
            patience=patience,
            validation_fraction=validation_fraction,
            standardize=standardize,
            log_target=log_target,
            bn_momentum=bn_momentum,
            bn_eps=bn_eps,
            restore_best=restore_best,
            random_state=random_state,
        )
        self.n_members = n_members
        self.n_jobs = n_jobs

    def fit(self, X, y, columns=None, years=None, config=None):
        X, pre, arch, feats, ids, target, train_idx, val_idx = self._prepare_fit(
            X, y, columns, years
        )
        settings = self._settings()
        seeds = [self.random_state + i for i in range(self.n_members)]
        if self.n_jobs == 1:
            results = [
                fit_network(feats, ids, target, arch, settings, s, train_idx, val_idx)
                for s in seeds
            ]
        else:
            results = Parallel(n_jobs=self.n_jobs)(
                delayed(fit_network)(
                    feats, ids, target, arch, settings, s, train_idx, val_idx
                )
                for s in seeds
            )
        self.preprocess_ = pre
        self.arch_ = arch
        self.members_ = [params for params, _ in results]
        self.histories_ = [history for _, history in results]
        self.columns_ = columns
        self.config_ = config
        return self

    def fit_matrix(self, matrix: FeatureMatrix):
        """Fit from a FeatureMatrix, carrying over its metadata."""
        return self.fit(
            matrix.X,
            matrix.y,
            columns=matrix.columns,
            years=matrix.row_years,
            config=matrix.config,
        )

    def predict(self, X):
        X = _check_Xy(X)
        model_scale = self._forward_members(X, self.members_).mean(axis=0)
        return self.preprocess_.inverse_y(model_scale)

    def predict_matrix(self, matrix: FeatureMatrix) -> np.ndarray:
        if self.columns_ is not None and matrix.columns != self.columns_:
            raise NetworkError("column metadata does not match the fitted model")
        return self.predict(matrix.X)

    def member_predictions(self, X) -> np.ndarray:
        """Per-member predictions in target scale, shape (n_members, n)."""
        X = _check_Xy(X)
        raw = self._forward_members(X, self.members_)
        return np.stack([self.preprocess_.inverse_y(r) for r in raw])
