"""Least-squares regression trees.

Splits maximise the reduction in within-node variance (equivalently,
Friedman's improvement score, which ranks candidate splits the same way).
Thresholds sit halfway between consecutive distinct feature values and
ties go to the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

import numpy as np

from gasleak import _accel
from gasleak.models._common import NotFittedError, check_width, check_xy, resolve_max_features

_ARRAYS = ("feature", "threshold", "left", "right", "value", "n_samples")


class RegressionTree:
    def __init__(self, max_features=None, min_samples_split: int = 2,
                 min_samples_leaf: int = 1, max_depth: int | None = None, seed: int = 0):
        if min_samples_split < 2:
            raise ValueError(f"min_samples_split must be >= 2, got {min_samples_split}")
        if min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {min_samples_leaf}")
        if max_depth is not None and max_depth < 0:
            raise ValueError(f"max_depth must be >= 0, got {max_depth}")
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_depth = max_depth
        self.seed = seed
        self.n_features_in: int | None = None

    def get_params(self) -> dict:
        return {"max_features": self.max_features, "min_samples_split": self.min_samples_split,
                "min_samples_leaf": self.min_samples_leaf, "max_depth": self.max_depth,
                "seed": self.seed}

    def fit(self, X, y, samples=None, rng: np.random.Generator | None = None):
        """Fit on rows ``samples`` of ``X`` (all rows when omitted).

        ``rng`` drives per-node feature subsampling; it defaults to a
        generator seeded with ``self.seed``.
        """
        X, y = check_xy(X, y)
        n, d = X.shape
        k = resolve_max_features(self.max_features, d)
        if samples is None:
            samples = np.arange(n, dtype=np.int64)
        if k < d:
            rng = rng if rng is not None else np.random.default_rng(self.seed)
            randoms = rng.integers(0, 2**62, size=len(samples) * k, dtype=np.int64)
        else:
            randoms = None
        depth = -1 if self.max_depth is None else self.max_depth
        arrays = _accel.backend.build_tree(X, y, samples, k, self.min_samples_split,
                                           self.min_samples_leaf, depth, randoms)
        for name, arr in zip(_ARRAYS, arrays):
            setattr(self, name, arr)
        self.n_features_in = d
        return self

    def _check(self):
        if self.n_features_in is None:
            raise NotFittedError("tree is not fitted")

    def predict(self, X) -> np.ndarray:
        self._check()
        X = check_width(X, self.n_features_in)
        return _accel.backend.predict_tree(X, self.feature, self.threshold, self.left,
                                           self.right, self.value)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        self._check()
        X = check_width(X, self.n_features_in)
        node = np.zeros(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            nd = 0
            while self.feature[nd] >= 0:
                nd = self.left[nd] if X[i, self.feature[nd]] <= self.threshold[nd] else self.right[nd]
            node[i] = nd
        return node

    @property
    def node_count(self) -> int:
        self._check()
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        self._check()
        depths = np.zeros(self.node_count, dtype=np.int64)
        for nd in range(self.node_count):
            if self.feature[nd] >= 0:
                depths[self.left[nd]] = depths[nd] + 1
                depths[self.right[nd]] = depths[nd] + 1
        return int(depths.max())

    @property
    def n_leaves(self) -> int:
        self._check()
        return int((self.feature < 0).sum())

    def get_state(self) -> tuple[dict, dict]:
        self._check()
        return ({"params": self.get_params(), "n_features_in": self.n_features_in},
                {name: getattr(self, name) for name in _ARRAYS})

    @classmethod
    def from_state(cls, meta: dict, arrays: dict) -> "RegressionTree":
        tree = cls(**meta["params"])
        for name in _ARRAYS:
            setattr(tree, name, np.asarray(arrays[name]))
        tree.n_features_in = meta["n_features_in"]
        return tree
