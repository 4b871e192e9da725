"""Classical GLS disaggregation with AR(1) residuals.

The autoregression parameter is chosen by maximizing the profiled Gaussian
log-likelihood of the yearly residuals over a grid; the fitted monthly
regression is completed with the residual-distribution step so yearly sums
are reproduced exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .gls import (
    aggregation_matrix,
    ar1_covariance,
    default_rho_grid,
    distribute_residuals,
    gls_fit,
)
from .series import DisaggregationError, MonthlySeries


@dataclass
class ChowLinResult:
    series: MonthlySeries
    theta: np.ndarray
    rho: float
    loglik: float
    rho_at_boundary: bool


def chow_lin(
    annual: np.ndarray,
    indicators: np.ndarray,
    rho_grid: np.ndarray | None = None,
    country: str = "",
    start_year: int = 0,
) -> ChowLinResult:
    """Disaggregate yearly totals using a small set of monthly indicators."""
    y = np.asarray(annual, dtype=float).ravel()
    Xm = np.atleast_2d(np.asarray(indicators, dtype=float))
    n = len(y)
    if Xm.shape[0] != 12 * n:
        raise DisaggregationError(
            f"indicators must have 12*{n} rows, got {Xm.shape[0]}"
        )
    if Xm.shape[1] >= n:
        raise DisaggregationError(
            "more indicator columns than identifiable from the yearly sums; "
            "reduce the indicator set"
        )
    grid = default_rho_grid() if rho_grid is None else np.asarray(rho_grid, dtype=float)

    A = aggregation_matrix(n)
    Xa = A @ Xm
    best = (-np.inf, None)
    for rho in grid:
        Vm = ar1_covariance(rho, 1.0, 12 * n)
        Va = A @ Vm @ A.T
        theta, u, loglik = gls_fit(y, Xa, Va)
        if loglik > best[0]:
            best = (loglik, (rho, theta, u))
    loglik, (rho, theta, u) = best
    at_boundary = rho in (grid[0], grid[-1]) and len(grid) > 1
    if at_boundary:
        warnings.warn(
            f"autoregression grid exhausted at boundary rho={rho:.3f}",
            UserWarning,
            stacklevel=2,
        )

    Vm = ar1_covariance(rho, 1.0, 12 * n)
    Va = A @ Vm @ A.T
    monthly = Xm @ theta + distribute_residuals(Vm, A, Va, u)
    series = MonthlySeries(
        country, start_year, monthly, "chow_lin", y, normalized=True
    )
    return ChowLinResult(series, theta, float(rho), float(loglik), at_boundary)
