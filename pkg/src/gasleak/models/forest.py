"""Bagged ensembles of regression trees."""

from __future__ import annotations

import numpy as np

from gasleak.models._common import NotFittedError, check_width, check_xy
from gasleak.models.tree import RegressionTree


class RandomForest:
    """Random forest regressor.

    Each tree sees a bootstrap resample of the rows and draws
    ``max_features`` candidate columns at every split. Tree ``i`` owns the
    random stream spawned from ``(seed, i)``, so results do not depend on
    fitting order.
    """

    def __init__(self, n_estimators: int = 100, max_features="all", bootstrap: bool = True,
                 min_samples_split: int = 2, min_samples_leaf: int = 1,
                 max_depth: int | None = None, seed: int = 0):
        if n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {n_estimators}")
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_depth = max_depth
        self.seed = seed
        self.trees: list[RegressionTree] = []
        self.n_features_in: int | None = None

    def get_params(self) -> dict:
        return {"n_estimators": self.n_estimators, "max_features": self.max_features,
                "bootstrap": self.bootstrap, "min_samples_split": self.min_samples_split,
                "min_samples_leaf": self.min_samples_leaf, "max_depth": self.max_depth,
                "seed": self.seed}

    def fit(self, X, y):
        X, y = check_xy(X, y)
        n = X.shape[0]
        streams = np.random.SeedSequence(self.seed).spawn(self.n_estimators)
        self.trees = []
        for i, ss in enumerate(streams):
            rng = np.random.default_rng(ss)
            samples = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = RegressionTree(self.max_features, self.min_samples_split,
                                  self.min_samples_leaf, self.max_depth, seed=i)
            tree.fit(X, y, samples=samples, rng=rng)
            self.trees.append(tree)
        self.n_features_in = X.shape[1]
        return self

    def _all_predictions(self, X) -> np.ndarray:
        if not self.trees:
            raise NotFittedError("forest is not fitted")
        X = check_width(X, self.n_features_in)
        return np.stack([t.predict(X) for t in self.trees])

    def predict(self, X) -> np.ndarray:
        return self._all_predictions(X).mean(axis=0)

    def predict_std(self, X) -> np.ndarray:
        """Spread of the individual tree predictions (population std over trees)."""
        preds = self._all_predictions(X)
        return np.sqrt(np.mean((preds - preds.mean(axis=0)) ** 2, axis=0))

    def get_state(self) -> tuple[dict, dict]:
        if not self.trees:
            raise NotFittedError("forest is not fitted")
        metas, arrays = [], {}
        for i, tree in enumerate(self.trees):
            meta, arr = tree.get_state()
            metas.append(meta)
            arrays.update({f"tree{i}/{k}": v for k, v in arr.items()})
        return {"params": self.get_params(), "n_features_in": self.n_features_in,
                "trees": metas}, arrays

    @classmethod
    def from_state(cls, meta: dict, arrays: dict) -> "RandomForest":
        forest = cls(**meta["params"])
        forest.trees = [
            RegressionTree.from_state(tm, {k.split("/", 1)[1]: v for k, v in arrays.items()
                                           if k.startswith(f"tree{i}/")})
            for i, tm in enumerate(meta["trees"])
        ]
        forest.n_features_in = meta["n_features_in"]
        return forest
