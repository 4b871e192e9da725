"""Shared pieces of the regression-based disaggregation methods.

The aggregation matrix collapses twelve monthly values per year into the
yearly sum; monthly residuals follow a first-order autoregression whose
covariance aggregates to the yearly level the same way.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, toeplitz

from .series import DisaggregationError

DEFAULT_RHO_GRID_SIZE = 199
PERIOD = 12


def aggregation_matrix(n_years: int, period: int = PERIOD) -> np.ndarray:
    """Yearly-sum operator: identity blocks of ones, shape (n, n*period)."""
    if n_years < 1:
        raise DisaggregationError("need at least one year")
    return np.kron(np.eye(n_years), np.ones((1, period)))


def ar1_covariance(rho: float, sigma2: float, dim: int) -> np.ndarray:
    """Stationary AR(1) covariance (sigma2/(1-rho^2)) * rho^|i-j|."""
    if not -1.0 < rho < 1.0:
        raise DisaggregationError("rho must lie in (-1, 1)")
    if sigma2 <= 0.0:
        raise DisaggregationError("sigma2 must be positive")
    first = (sigma2 / (1.0 - rho**2)) * rho ** np.arange(dim)
    return toeplitz(first)


def default_rho_grid(size: int = DEFAULT_RHO_GRID_SIZE) -> np.ndarray:
    return np.linspace(-0.999, 0.999, size)


def profiled_gaussian_loglik(residuals: np.ndarray, V: np.ndarray) -> float:
    """Log-likelihood of GLS residuals with the scale profiled out."""
    n = len(residuals)
    L = cho_factor(V, lower=True)
    Vinv_u = cho_solve(L, residuals)
    sigma2 = float(residuals @ Vinv_u) / n
    logdet = 2.0 * float(np.sum(np.log(np.diag(L[0]))))
    return -0.5 * (n * np.log(2.0 * np.pi) + n * np.log(sigma2) + logdet + n)


def gls_fit(y: np.ndarray, X: np.ndarray, V: np.ndarray):
    """GLS estimate, residuals and profiled log-likelihood.

    Raises on singular covariance or normal matrix.
    """
    n = len(y)
    try:
        L = cho_factor(V, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DisaggregationError("singular aggregated covariance") from exc
    Vinv_X = cho_solve(L, X)
    Vinv_y = cho_solve(L, y)
    normal = X.T @ Vinv_X
    try:
        theta = np.linalg.solve(normal, X.T @ Vinv_y)
    except np.linalg.LinAlgError as exc:
        raise DisaggregationError(
            "singular GLS system; reduce the indicator set"
        ) from exc
    u = y - X @ theta
    Vinv_u = cho_solve(L, u)
    sigma2 = float(u @ Vinv_u) / n
    logdet = 2.0 * float(np.sum(np.log(np.diag(L[0]))))
    if sigma2 <= 0.0:
        loglik = np.inf  # perfect fit: infinitely peaked likelihood
    else:
        loglik = -0.5 * (n * np.log(2.0 * np.pi) + n * np.log(sigma2) + logdet + n)
    return theta, u, loglik


def distribute_residuals(
    Vm: np.ndarray, A: np.ndarray, Va: np.ndarray, u: np.ndarray
) -> np.ndarray:
    """Spread yearly residuals over months so yearly sums are restored."""
    L = cho_factor(Va, lower=True)
    return Vm @ A.T @ cho_solve(L, u)
