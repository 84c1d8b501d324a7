from __future__ import annotations

import math

import numpy as np


class NotFittedError(RuntimeError):
    pass


def check_xy(X, y=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty matrix")
    if y is None:
        return X
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


def check_width(X, n_features: int):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(f"model expects {n_features} input columns, got shape {X.shape}")
    return X


def resolve_max_features(max_features, n_features: int) -> int:
    """Translate a max_features setting into a column count.

    ``None``, ``"all"`` and ``"auto"`` mean every feature (the regression
    convention).
    """
    if max_features is None or max_features in ("all", "auto"):
        return n_features
    if max_features == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if max_features == "log2":
        return max(1, int(math.log2(n_features)))
    if isinstance(max_features, float):
        if not 0.0 < max_features <= 1.0:
            raise ValueError(f"fractional max_features must be in (0, 1], got {max_features}")
        return max(1, int(max_features * n_features))
    if isinstance(max_features, (int, np.integer)):
        if not 1 <= max_features <= n_features:
            raise ValueError(f"max_features must be in [1, {n_features}], got {max_features}")
        return int(max_features)
    raise ValueError(f"unsupported max_features {max_features!r}")
