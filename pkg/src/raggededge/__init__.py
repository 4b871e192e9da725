"""Two-step nowcasting: annual predictions from mixed-frequency panels,
then temporal disaggregation of the annual figures into monthly series."""

from .baselines import OlsRegressor, RankDeficiencyError
from .dataio import (
    MACRO_VARIABLES,
    AnnualTarget,
    DataError,
    MacroSeries,
    Panel,
    SviSeries,
    interpolate_gaps,
    load_panel,
    panels_equal,
    write_panel,
)
from .features import (
    DEFAULT_TAU,
    Config,
    FeatureColumnMeta,
    FeatureError,
    FeatureMatrix,
    assemble,
    build_annual_svi_block,
    build_ar_block,
    build_macro_block,
    build_month_country_block,
    build_ytd_svi_block,
)
from .nn import MlpEnsembleRegressor, MlpRegressor, load_model, save_model
from .synthetic import SyntheticSpec, generate_synthetic_panel, load_spec

__version__ = "0.1.0"

__all__ = [
    "MACRO_VARIABLES",
    "DEFAULT_TAU",
    "AnnualTarget",
    "Config",
    "DataError",
    "FeatureColumnMeta",
    "FeatureError",
    "FeatureMatrix",
    "MacroSeries",
    "MlpEnsembleRegressor",
    "MlpRegressor",
    "OlsRegressor",
    "Panel",
    "RankDeficiencyError",
    "SviSeries",
    "SyntheticSpec",
    "assemble",
    "build_annual_svi_block",
    "build_ar_block",
    "build_macro_block",
    "build_month_country_block",
    "build_ytd_svi_block",
    "generate_synthetic_panel",
    "interpolate_gaps",
    "load_model",
    "load_panel",
    "load_spec",
    "panels_equal",
    "save_model",
    "write_panel",
]
