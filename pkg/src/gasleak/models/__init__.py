"""Regression observers, their metrics, tuning and persistence."""

from gasleak.models.boosting import GradientBoosting
from gasleak.models.forest import RandomForest
from gasleak.models.metrics import UndefinedVarianceError, mae, r2, rmse
from gasleak.models.mlp import NeuralNetRegressor
from gasleak.models.observer import (
    DEFAULT_GRIDS, ESTIMATORS, FAMILIES, PIPELINE_PARAMS, QUICK_GRIDS, RECIPES, Recipe,
    RegressorModel, fit_decision_tree, fit_gradient_boosting, fit_mlp, fit_random_forest,
    fit_svr, metric_block, search_family, train_observer,
)
from gasleak.models.search import GridSearchResult, grid_search, kfold_indices
from gasleak.models.serialize import (
    ModelFormatError, load_model, model_from_bytes, model_to_bytes, save_model,
)
from gasleak.models.svr import SupportVectorRegressor
from gasleak.models.tree import RegressionTree

__all__ = [
    "DEFAULT_GRIDS", "ESTIMATORS", "FAMILIES", "PIPELINE_PARAMS", "QUICK_GRIDS", "RECIPES",
    "GradientBoosting", "GridSearchResult", "ModelFormatError", "NeuralNetRegressor",
    "RandomForest", "Recipe", "RegressionTree", "RegressorModel", "SupportVectorRegressor",
    "UndefinedVarianceError", "fit_decision_tree", "fit_gradient_boosting", "fit_mlp",
    "fit_random_forest", "fit_svr", "grid_search", "kfold_indices", "load_model", "mae",
    "metric_block", "model_from_bytes", "model_to_bytes", "r2", "rmse", "save_model",
    "search_family", "train_observer",
]
