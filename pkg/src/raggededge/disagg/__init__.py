from .allocation import AllocationReport, nn_elasticity_disagg
from .chowlin import ChowLinResult, chow_lin
from .cumulative import (
    SUM_CONFIG,
    corrupted_input_disagg,
    corrupted_input_series,
    cumulative_sum_matrix,
)
from .gls import aggregation_matrix, ar1_covariance, default_rho_grid
from .series import METHODS, DisaggregationError, MonthlySeries
from .sparse import ConvergenceError, SparseTdResult, lasso_cd, soft_threshold, sparse_td

__all__ = [
    "METHODS",
    "SUM_CONFIG",
    "AllocationReport",
    "ChowLinResult",
    "ConvergenceError",
    "DisaggregationError",
    "MonthlySeries",
    "SparseTdResult",
    "aggregation_matrix",
    "ar1_covariance",
    "chow_lin",
    "corrupted_input_disagg",
    "corrupted_input_series",
    "cumulative_sum_matrix",
    "default_rho_grid",
    "lasso_cd",
    "nn_elasticity_disagg",
    "soft_threshold",
    "sparse_td",
]
