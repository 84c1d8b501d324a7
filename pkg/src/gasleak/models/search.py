"""Contiguous k-fold cross-validation and exhaustive grid search."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from gasleak.models._common import check_xy
from gasleak.models.metrics import r2_or_nan


def kfold_indices(n: int, k: int = 5) -> list[tuple[np.ndarray, np.ndarray]]:
    """Contiguous, unshuffled folds; the first ``n % k`` folds get one extra row."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise ValueError(f"need at least k={k} samples, got {n}")
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    if sizes.min() < 2:
        raise ValueError(f"fold with fewer than 2 samples ({n} rows, k={k})")
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    everything = np.arange(n)
    folds = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        val = everything[a:b]
        train = np.concatenate([everything[:a], everything[b:]])
        folds.append((train, val))
    return folds


def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product in insertion order (first key varies slowest)."""
    if not grid:
        return [{}]
    keys = list(grid)
    for key in keys:
        if len(grid[key]) == 0:
            raise ValueError(f"grid entry {key!r} is empty")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def cell_seed(seed: int, cell: int) -> int:
    """Independent seed for grid cell ``cell`` under master ``seed``."""
    return int(np.random.SeedSequence([seed, cell]).generate_state(1)[0])


@dataclass
class GridSearchResult:
    cells: list[dict]
    cv_scores: np.ndarray          # (n_cells, k) validation R^2
    best_index: int
    best_estimator: object
    seeds: list[int] = field(default_factory=list)

    @property
    def mean_scores(self) -> np.ndarray:
        return self.cv_scores.mean(axis=1)

    @property
    def best_params(self) -> dict:
        return dict(self.cells[self.best_index])

    @property
    def best_score(self) -> float:
        return float(self.mean_scores[self.best_index])


def cross_validate(factory, params: dict, X, y, k: int = 5) -> np.ndarray:
    scores = []
    for train, val in kfold_indices(X.shape[0], k):
        est = factory(**params).fit(X[train], y[train])
        with np.errstate(all="ignore"):
            pred = est.predict(X[val])
        scores.append(r2_or_nan(y[val], pred) if np.all(np.isfinite(pred)) else -np.inf)
    return np.asarray(scores, dtype=float)


def _run_cell(args):
    factory, params, X, y, k = args
    return cross_validate(factory, params, X, y, k)


def select_best(mean_scores) -> int:
    """First cell attaining the maximal mean score; NaN cells never win."""
    m = np.where(np.isfinite(mean_scores), mean_scores, -np.inf)
    return int(np.argmax(m))


def grid_search(factory, grid: dict, X, y, k: int | None = 5, seed: int = 0,
                base_params: dict | None = None, jobs: int = 1) -> GridSearchResult:
    """Score every cell of ``grid`` by mean k-fold R^2 and refit the winner.

    ``factory`` builds an estimator from keyword parameters. Each cell gets
    its own seed derived from ``(seed, cell index)``, so results do not
    depend on ``jobs``. ``k=None`` skips cross-validation, which is only
    meaningful for a single-cell grid; its score is then NaN.
    """
    X, y = check_xy(X, y)
    cells = expand_grid(grid)
    if k is None:
        if len(cells) != 1:
            raise ValueError(f"k=None needs a single-cell grid, got {len(cells)} cells")
        s = cell_seed(seed, 0)
        estimator = factory(**{**(base_params or {}), **cells[0], "seed": s}).fit(X, y)
        return GridSearchResult(cells, np.full((1, 1), np.nan), 0, estimator, [s])
    kfold_indices(X.shape[0], k)
    seeds = [cell_seed(seed, i) for i in range(len(cells))]
    full = [{**(base_params or {}), **cell, "seed": s} for cell, s in zip(cells, seeds)]
    tasks = [(factory, p, X, y, k) for p in full]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(_run_cell, tasks))
    else:
        scores = [_run_cell(t) for t in tasks]
    cv = np.vstack(scores)
    best = select_best(cv.mean(axis=1))
    estimator = factory(**full[best]).fit(X, y)
    return GridSearchResult(cells, cv, best, estimator, seeds)
