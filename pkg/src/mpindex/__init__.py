"""Maintenance pressure risk intelligence for weather-exposed infrastructure.

Pipeline: daily environmental series -> composite exceedance index with
Low/Medium/High bands -> boosted-tree surrogate classifier explained by
exact Shapley values -> additive weekly forecaster. Exposed as a library,
a CLI (``mpindex``), and an HTTP service consumed by the scenario-builder
dashboard.

Attribution (``mpindex.explain``) and the HTTP service are imported lazily
to keep CLI subcommands that do not need them fast to start.
"""

from .evaluate import ClassificationReport, ConfusionMatrix, RegressionMetrics, confusion, regression, report
from .features import (
    FeatureMatrix,
    FeatureSpec,
    LagSpec,
    RollingSpec,
    ScalerParams,
    apply_scaler,
    build_feature_matrix,
    build_raw_feature_matrix,
    fit_scaler,
    minmax_apply,
    minmax_fit,
    rolling_stat,
)
from .forecast import ForecastConfig, ForecastModel, ForecastResult, decompose, fit, predict, select_regressors
from .gbdt import TrainParams, Tree, TreeEnsemble, train
from .ingest import (
    EnvRecord,
    EnvSeries,
    ValidationReport,
    fill_gaps,
    merge_aod,
    parse_aod_csv,
    parse_env_csv,
    serialize_env_csv,
    validate,
)
from .mpi import (
    MpiConfig,
    MpiScore,
    TriggerVector,
    compute_mpi,
    compute_triggers,
    derive_eof_weights,
    irr_variability,
    label_risk,
    normalize_frequencies,
    resolve_band_edges,
    resolve_irr_threshold,
    score_series,
    weekly_resample,
)
from .synth import ScenarioSpec, VariableBaseline, generate

__version__ = "0.1.0"

__all__ = [
    "ClassificationReport", "ConfusionMatrix", "RegressionMetrics", "confusion", "regression", "report",
    "FeatureMatrix", "FeatureSpec", "LagSpec", "RollingSpec", "ScalerParams",
    "apply_scaler", "build_feature_matrix", "build_raw_feature_matrix", "fit_scaler",
    "minmax_apply", "minmax_fit", "rolling_stat",
    "ForecastConfig", "ForecastModel", "ForecastResult", "decompose", "fit", "predict", "select_regressors",
    "TrainParams", "Tree", "TreeEnsemble", "train",
    "EnvRecord", "EnvSeries", "ValidationReport", "fill_gaps", "merge_aod",
    "parse_aod_csv", "parse_env_csv", "serialize_env_csv", "validate",
    "MpiConfig", "MpiScore", "TriggerVector", "compute_mpi", "compute_triggers",
    "derive_eof_weights", "irr_variability", "label_risk", "normalize_frequencies",
    "resolve_band_edges", "resolve_irr_threshold", "score_series", "weekly_resample",
    "ScenarioSpec", "VariableBaseline", "generate",
    "__version__",
]
