"""Epsilon-insensitive support vector regression."""

from __future__ import annotations

import numpy as np

from gasleak import _accel
from gasleak.models._common import NotFittedError, check_width, check_xy


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def linear_kernel(A, B, gamma: float = 0.0) -> np.ndarray:
    return np.asarray(A, dtype=float) @ np.asarray(B, dtype=float).T


KERNELS = {"rbf": rbf_kernel, "linear": linear_kernel}


def resolve_gamma(gamma, X) -> float:
    if gamma == "scale":
        var = float(np.var(X))
        return 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    if gamma == "auto":
        return 1.0 / X.shape[1]
    g = float(gamma)
    if not g > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return g


class SupportVectorRegressor:
    """Epsilon-SVR solved by sequential minimal optimisation.

    The full kernel matrix is held in memory, so training sets larger than
    ``max_samples`` are reduced to a seeded random subset of that size.
    """

    def __init__(self, C: float = 1.0, epsilon: float = 0.1, kernel: str = "rbf",
                 gamma="scale", tol: float = 1e-3, max_iter: int = 1_000_000,
                 max_samples: int | None = 3000, seed: int = 0):
        if not C > 0:
            raise ValueError(f"C must be positive, got {C}")
        if epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {epsilon}")
        if kernel not in KERNELS:
            raise ValueError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}")
        self.C = C
        self.epsilon = epsilon
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.max_samples = max_samples
        self.seed = seed
        self.n_features_in: int | None = None

    def get_params(self) -> dict:
        return {"C": self.C, "epsilon": self.epsilon, "kernel": self.kernel,
                "gamma": self.gamma, "tol": self.tol, "max_iter": self.max_iter,
                "max_samples": self.max_samples, "seed": self.seed}

    def fit(self, X, y):
        X, y = check_xy(X, y)
        if self.max_samples is not None and X.shape[0] > self.max_samples:
            rng = np.random.default_rng(self.seed)
            keep = np.sort(rng.choice(X.shape[0], self.max_samples, replace=False))
            X, y = X[keep], y[keep]
        self.gamma_ = resolve_gamma(self.gamma, X)
        K = KERNELS[self.kernel](X, X, self.gamma_)
        coef, bias, iters, converged = _accel.backend.smo_svr(
            K, y, float(self.C), float(self.epsilon), float(self.tol), int(self.max_iter))
        coef = np.asarray(coef)
        support = np.flatnonzero(coef != 0)
        self.dual_coef_ = coef[support]
        self.support_vectors_ = X[support]
        self.support_ = support
        self.intercept_ = float(bias)
        self.n_iter_ = int(iters)
        self.converged_ = bool(converged)
        self.n_features_in = X.shape[1]
        return self

    def decision(self, X) -> np.ndarray:
        if self.n_features_in is None:
            raise NotFittedError("model is not fitted")
        X = check_width(X, self.n_features_in)
        if self.dual_coef_.size == 0:
            return np.full(X.shape[0], self.intercept_)
        return KERNELS[self.kernel](X, self.support_vectors_, self.gamma_) @ self.dual_coef_ \
            + self.intercept_

    predict = decision

    def get_state(self) -> tuple[dict, dict]:
        if self.n_features_in is None:
            raise NotFittedError("model is not fitted")
        meta = {"params": self.get_params(), "gamma_value": self.gamma_,
                "intercept": self.intercept_, "n_iter": self.n_iter_,
                "converged": self.converged_, "n_features_in": self.n_features_in}
        return meta, {"dual_coef": self.dual_coef_, "support_vectors": self.support_vectors_,
                      "support": self.support_}

    @classmethod
    def from_state(cls, meta: dict, arrays: dict) -> "SupportVectorRegressor":
        model = cls(**meta["params"])
        model.gamma_ = meta["gamma_value"]
        model.intercept_ = meta["intercept"]
        model.n_iter_ = meta["n_iter"]
        model.converged_ = meta["converged"]
        model.n_features_in = meta["n_features_in"]
        model.dual_coef_ = np.asarray(arrays["dual_coef"])
        model.support_vectors_ = np.asarray(arrays["support_vectors"])
        model.support_ = np.asarray(arrays["support"])
        return model
