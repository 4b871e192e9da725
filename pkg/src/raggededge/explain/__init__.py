from .background import BackgroundError, BackgroundSet, kmeans, kmeans_background
from .elasticity import ElasticityEstimate, ElasticityTable, elasticity_table, expected_elasticity
from .kernelshap import (
    ExplainError,
    ShapResult,
    ShapSummary,
    kernel_shap,
    shap_summary,
    shapley_kernel_weight,
    topic_importance,
)

__all__ = [
    "BackgroundError",
    "BackgroundSet",
    "ElasticityEstimate",
    "ElasticityTable",
    "ExplainError",
    "ShapResult",
    "ShapSummary",
    "elasticity_table",
    "expected_elasticity",
    "kernel_shap",
    "kmeans",
    "kmeans_background",
    "shap_summary",
    "shapley_kernel_weight",
    "topic_importance",
]
