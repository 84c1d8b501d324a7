"""Regression scores used to tune and report observers."""

from __future__ import annotations

import numpy as np


class UndefinedVarianceError(ValueError):
    """R^2 is undefined when the reference values have zero variance."""


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} vs {y_hat.shape[0]}")
    if y.size == 0:
        raise ValueError("metrics need at least one sample")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def mae(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def r2(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        raise UndefinedVarianceError("r2 undefined for constant targets")
    return float(1.0 - np.sum((y - y_hat) ** 2) / ss_tot)


def r2_or_nan(y, y_hat) -> float:
    try:
        return r2(y, y_hat)
    except UndefinedVarianceError:
        return float("nan")


def score_block(y, y_hat) -> dict[str, float]:
    return {"rmse": rmse(y, y_hat), "mae": mae(y, y_hat), "r2": r2_or_nan(y, y_hat)}
