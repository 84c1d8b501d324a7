"""Least-squares gradient boosting with shrinkage."""

from __future__ import annotations

import numpy as np

from gasleak.models._common import NotFittedError, check_width, check_xy
from gasleak.models.tree import RegressionTree


class GradientBoosting:
    """Stagewise additive trees.

    Starts from the target mean; each stage fits a tree to the current
    residuals (the negative gradient of squared loss) and adds it scaled by
    ``learning_rate``.
    """

    def __init__(self, n_estimators: int = 100, learning_rate: float = 0.1,
                 max_depth: int | None = 3, min_samples_split: int = 2,
                 min_samples_leaf: int = 1, max_features=None, seed: int = 0):
        if not learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        if n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {n_estimators}")
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.seed = seed
        self.trees: list[RegressionTree] = []
        self.init_: float | None = None
        self.train_loss_: np.ndarray | None = None
        self.n_features_in: int | None = None

    def get_params(self) -> dict:
        return {"n_estimators": self.n_estimators, "learning_rate": self.learning_rate,
                "max_depth": self.max_depth, "min_samples_split": self.min_samples_split,
                "min_samples_leaf": self.min_samples_leaf, "max_features": self.max_features,
                "seed": self.seed}

    def fit(self, X, y):
        X, y = check_xy(X, y)
        rng = np.random.default_rng(self.seed)
        self.init_ = float(np.mean(y))
        current = np.full(y.shape[0], self.init_)
        losses = [float(np.mean((y - current) ** 2))]
        self.trees = []
        for _ in range(self.n_estimators):
            tree = RegressionTree(self.max_features, self.min_samples_split,
                                  self.min_samples_leaf, self.max_depth)
            tree.fit(X, y - current, rng=rng)
            current = current + self.learning_rate * tree.predict(X)
            losses.append(float(np.mean((y - current) ** 2)))
            self.trees.append(tree)
        self.train_loss_ = np.asarray(losses)
        self.n_features_in = X.shape[1]
        return self

    def staged_predict(self, X):
        if self.init_ is None:
            raise NotFittedError("model is not fitted")
        X = check_width(X, self.n_features_in)
        current = np.full(X.shape[0], self.init_)
        yield current
        for tree in self.trees:
            current = current + self.learning_rate * tree.predict(X)
            yield current

    def predict(self, X) -> np.ndarray:
        *_, last = self.staged_predict(X)
        return last

    def get_state(self) -> tuple[dict, dict]:
        if self.init_ is None:
            raise NotFittedError("model is not fitted")
        metas, arrays = [], {"train_loss": self.train_loss_}
        for i, tree in enumerate(self.trees):
            meta, arr = tree.get_state()
            metas.append(meta)
            arrays.update({f"tree{i}/{k}": v for k, v in arr.items()})
        return {"params": self.get_params(), "init": self.init_,
                "n_features_in": self.n_features_in, "trees": metas}, arrays

    @classmethod
    def from_state(cls, meta: dict, arrays: dict) -> "GradientBoosting":
        model = cls(**meta["params"])
        model.init_ = meta["init"]
        model.train_loss_ = np.asarray(arrays["train_loss"])
        model.trees = [
            RegressionTree.from_state(tm, {k.split("/", 1)[1]: v for k, v in arrays.items()
                                           if k.startswith(f"tree{i}/")})
            for i, tm in enumerate(meta["trees"])
        ]
        model.n_features_in = meta["n_features_in"]
        return model
