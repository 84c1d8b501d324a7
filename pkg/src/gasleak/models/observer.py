"""Flow observers: a fitted estimator bundled with the preprocessing it needs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from gasleak import dataio
from gasleak.models.boosting import GradientBoosting
from gasleak.models.forest import RandomForest
from gasleak.models.metrics import r2_or_nan, score_block
from gasleak.models.mlp import NeuralNetRegressor
from gasleak.models.search import GridSearchResult, grid_search
from gasleak.models.svr import SupportVectorRegressor
from gasleak.models.tree import RegressionTree

log = logging.getLogger(__name__)

ESTIMATORS = {
    "decision_tree": RegressionTree,
    "random_forest": RandomForest,
    "gradient_boosting": GradientBoosting,
    "svr": SupportVectorRegressor,
    "mlp": NeuralNetRegressor,
}
FAMILIES = tuple(ESTIMATORS)

# (polynomial degree or None, min-max scaling after expansion)
RECIPES = {
    "decision_tree": (2, False),
    "random_forest": (2, False),
    "gradient_boosting": (2, False),
    "svr": (2, True),
    "mlp": (None, True),
}

# Paper ranges discretised in log steps.
DEFAULT_GRIDS = {
    "decision_tree": {"max_features": [None, "log2", "sqrt"], "min_samples_split": [2, 5, 10]},
    "random_forest": {"n_estimators": [10, 100], "max_features": ["sqrt", "all", "log2"]},
    "gradient_boosting": {"learning_rate": [0.1, 1.0, 10.0], "n_estimators": [50, 500]},
    "svr": {"C": [0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0], "kernel": ["rbf", "linear"]},
    "mlp": {"hidden_layer_sizes": [(u,) for u in (1, 5, 10, 20)] + [(u, u) for u in (5, 10, 20)],
            "alpha": [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0]},
}

# Reduced grids that keep a full five-family training run to a few minutes.
QUICK_GRIDS = {
    "decision_tree": {"max_features": [None, "sqrt"], "min_samples_split": [2, 10]},
    "random_forest": {"n_estimators": [10], "max_features": ["all", "sqrt"]},
    "gradient_boosting": {"learning_rate": [0.3, 0.5], "n_estimators": [20, 30]},
    "svr": {"C": [10.0, 100.0], "kernel": ["rbf"]},
    "mlp": {"hidden_layer_sizes": [(10,), (20,)], "alpha": [1e-4]},
}

# Settings held fixed under every grid. Residuals must sit under MAE + 0.01
# away from transients: boosting needs full-depth stages, the SVR a narrow
# tube and the network a quasi-Newton solver run to convergence.
PIPELINE_PARAMS = {
    "decision_tree": {},
    "random_forest": {},
    "gradient_boosting": {"max_depth": None, "min_samples_split": 10},
    "svr": {"epsilon": 0.005, "max_samples": 1000},
    "mlp": {"solver": "lbfgs", "max_iter": 3000},
}


def _check_family(family: str) -> None:
    if family not in ESTIMATORS:
        raise ValueError(f"unknown model family {family!r}; choose from {FAMILIES}")


@dataclass(frozen=True)
class Recipe:
    """Preprocessing from raw feature columns to the estimator's inputs."""

    input_names: tuple[str, ...]
    poly_degree: int | None = None
    scaler: dataio.Scaler | None = None

    @property
    def n_inputs(self) -> int:
        return len(self.input_names)

    @classmethod
    def fit(cls, X, input_names, poly_degree: int | None, scale: bool) -> "Recipe":
        recipe = cls(tuple(input_names), poly_degree, None)
        if not scale:
            return recipe
        return cls(tuple(input_names), poly_degree, dataio.fit_scaler(recipe.apply(X)))

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_inputs:
            raise ValueError(f"recipe expects {self.n_inputs} columns {list(self.input_names)}, "
                             f"got shape {X.shape}")
        if self.poly_degree is not None:
            X = dataio.PolyExpansion(self.poly_degree, self.input_names).transform(X)
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return X

    def describe(self) -> str:
        steps = []
        if self.poly_degree is not None:
            steps.append(f"poly{self.poly_degree}")
        if self.scaler is not None:
            steps.append("minmax")
        return "+".join(steps) or "identity"


@dataclass(frozen=True)
class RegressorModel:
    family: str
    estimator: object
    recipe: Recipe
    params: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        return self.estimator.predict(self.recipe.apply(X))

    def predict_frame(self, frame: pd.DataFrame) -> np.ndarray:
        return self.predict(frame[list(self.recipe.input_names)].to_numpy(dtype=float))

    @property
    def test_mae(self) -> float | None:
        return self.metadata.get("scores", {}).get("test", {}).get("mae")

    @property
    def target(self) -> str:
        return self.metadata.get("target", dataio.FLOWRATE)


def _fit(family: str, X, y, params: dict | None, input_names=None) -> RegressorModel:
    _check_family(family)
    X = np.asarray(X, dtype=float)
    names = tuple(input_names or (f"x{i}" for i in range(X.shape[1])))
    params = dict(params or {})
    est = ESTIMATORS[family](**params).fit(X, y)
    return RegressorModel(family, est, Recipe(names), params, {})


def fit_decision_tree(X, y, params: dict | None = None) -> RegressorModel:
    return _fit("decision_tree", X, y, params)


def fit_random_forest(X, y, params: dict | None = None) -> RegressorModel:
    return _fit("random_forest", X, y, params)


def fit_gradient_boosting(X, y, params: dict | None = None) -> RegressorModel:
    return _fit("gradient_boosting", X, y, params)


def fit_svr(X_scaled, y, params: dict | None = None) -> RegressorModel:
    return _fit("svr", X_scaled, y, params)


def fit_mlp(X_scaled, y, params: dict | None = None) -> RegressorModel:
    return _fit("mlp", X_scaled, y, params)


def search_family(family: str, grid: dict, X, y, k: int | None = 5, seed: int = 0,
                  base_params: dict | None = None, jobs: int = 1) -> GridSearchResult:
    _check_family(family)
    return grid_search(ESTIMATORS[family], grid, X, y, k=k, seed=seed,
                       base_params=base_params, jobs=jobs)


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def train_observer(frame: pd.DataFrame, family: str, grid: dict | None = None,
                   base_params: dict | None = None, target: str = dataio.FLOWRATE,
                   features=dataio.FEATURE_COLUMNS, seed: int = 12,
                   test_fraction: float = 0.30, k: int | None = 5, jobs: int = 1) -> RegressorModel:
    """Clean, split, preprocess, grid-search and score one observer.

    ``k=None`` fits a single-cell grid without cross-validation.

    The returned model's metadata carries train/test/CV scores; its test
    MAE sets the default detection threshold.
    """
    _check_family(family)
    frame, report = dataio.clean_with_report(frame)
    train, test = dataio.split(frame, test_fraction, seed)
    tr = dataio.feature_matrix(train, target, features)
    te = dataio.feature_matrix(test, target, features)
    degree, scale = RECIPES[family]
    recipe = Recipe.fit(tr.X, tr.feature_names, degree, scale)
    if grid is None:
        grid = DEFAULT_GRIDS[family]
    base = {**PIPELINE_PARAMS[family], **(base_params or {})}
    result = search_family(family, grid, recipe.apply(tr.X), tr.y, k=k, seed=seed,
                           base_params=base, jobs=jobs)
    params = {**base, **result.best_params, "seed": result.seeds[result.best_index]}
    est = result.best_estimator
    pred_tr = est.predict(recipe.apply(tr.X))
    pred_te = est.predict(recipe.apply(te.X))
    cv_r2 = result.best_score
    scores = {"train": score_block(tr.y, pred_tr), "test": score_block(te.y, pred_te),
              "cv_r2": cv_r2 if np.isfinite(cv_r2) else None}
    metadata = {
        "target": target,
        "features": list(features),
        "seed": seed,
        "test_fraction": test_fraction,
        "k": k,
        "n_train": len(tr),
        "n_test": len(te),
        "rows_removed": report.removed,
        "scores": scores,
        "grid": {"cells": _jsonable(result.cells),
                 "mean_cv_r2": [float(s) if np.isfinite(s) else None
                                for s in result.mean_scores],
                 "best_index": result.best_index},
    }
    log.info("%s: best %s cv_r2=%s test_r2=%.5f", family, result.best_params,
             scores["cv_r2"], scores["test"]["r2"])
    return RegressorModel(family, est, recipe, _jsonable(params), metadata)


def metric_block(model: RegressorModel) -> str:
    """Accuracy summary laid out like the model-validation table."""
    s = model.metadata["scores"]
    rows = [("RMSE", s["test"]["rmse"]), ("MAE", s["test"]["mae"]),
            ("R2 (train)", s["train"]["r2"]), ("R2 (test)", s["test"]["r2"]),
            ("R2 (CV)", s["cv_r2"])]
    return "\n".join(f"{name:<12}{'n/a' if value is None else format(value, '.4f')}"
                     for name, value in rows)


__all__ = [
    "DEFAULT_GRIDS", "ESTIMATORS", "FAMILIES", "PIPELINE_PARAMS", "QUICK_GRIDS", "RECIPES",
    "Recipe", "RegressorModel", "fit_decision_tree", "fit_gradient_boosting", "fit_mlp",
    "fit_random_forest", "fit_svr", "metric_block", "r2_or_nan", "search_family",
    "train_observer",
]
