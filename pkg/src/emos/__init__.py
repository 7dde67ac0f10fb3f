"""EMOS link functions, estimation and rolling training."""

from src.emos.estimation import (
    default_coefficients,
    fit_emos,
    fit_tnln_mixture,
    mean_objective,
)
from src.emos.links import (
    EnsembleDesign,
    PredictiveBatch,
    batch_predictive,
    csg_gev_mixture_density,
    csg_predictive,
    ensemble_stats,
    gev_predictive,
    history_predictive,
    ln_predictive,
    predictive,
    tn_predictive,
    tnln_predictive,
)
from src.emos.models import (
    EmosCoefficients,
    EmosFamily,
    EnsembleForecast,
    EnsembleStats,
    ForecastBatch,
    ForecastCase,
    GroupLayout,
    Objective,
    TrainingWindow,
    Variable,
)
from src.emos.rolling import RollingMode, rolling_fit, training_window

__all__ = [
    "EmosCoefficients",
    "EmosFamily",
    "EnsembleDesign",
    "EnsembleForecast",
    "EnsembleStats",
    "ForecastBatch",
    "ForecastCase",
    "GroupLayout",
    "Objective",
    "PredictiveBatch",
    "RollingMode",
    "TrainingWindow",
    "Variable",
    "batch_predictive",
    "csg_gev_mixture_density",
    "csg_predictive",
    "default_coefficients",
    "ensemble_stats",
    "fit_emos",
    "fit_tnln_mixture",
    "gev_predictive",
    "history_predictive",
    "ln_predictive",
    "mean_objective",
    "predictive",
    "rolling_fit",
    "tn_predictive",
    "tnln_predictive",
    "training_window",
]
