"""Feed-forward network regressor (tanh hidden layers, linear output)."""

from __future__ import annotations

import numpy as np
from scipy import optimize

from gasleak.models._common import NotFittedError, check_width, check_xy

SOLVERS = ("momentum", "lbfgs")


def _shapes(layers):
    return [(layers[i], layers[i + 1]) for i in range(len(layers) - 1)]


def pack(weights, biases) -> np.ndarray:
    return np.concatenate([w.ravel() for w in weights] + [b.ravel() for b in biases])


def unpack(theta, layers):
    weights, biases, pos = [], [], 0
    for fi, fo in _shapes(layers):
        weights.append(theta[pos:pos + fi * fo].reshape(fi, fo))
        pos += fi * fo
    for _, fo in _shapes(layers):
        biases.append(theta[pos:pos + fo])
        pos += fo
    return weights, biases


def forward(theta, layers, X):
    weights, biases = unpack(theta, layers)
    acts = [X]
    h = X
    for k, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = z if k == len(weights) - 1 else np.tanh(z)
        acts.append(h)
    return acts


def loss_and_grad(theta, layers, X, y, alpha):
    """Half mean squared error plus an L2 penalty on the weights.

    Returns the loss and its gradient with respect to the packed
    parameter vector, computed by backpropagation.
    """
    n = X.shape[0]
    weights, _ = unpack(theta, layers)
    acts = forward(theta, layers, X)
    err = acts[-1].ravel() - y
    loss = 0.5 * np.mean(err ** 2) + 0.5 * alpha / n * sum(np.sum(w * w) for w in weights)
    delta = err[:, None] / n
    gw, gb = [None] * len(weights), [None] * len(weights)
    for k in range(len(weights) - 1, -1, -1):
        gw[k] = acts[k].T @ delta + alpha / n * weights[k]
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ weights[k].T) * (1.0 - acts[k] ** 2)
    return float(loss), pack(gw, gb)


class NeuralNetRegressor:
    """Multilayer perceptron trained on a standardised target.

    ``solver="momentum"`` runs full-batch gradient descent with momentum
    and a bold-driver learning rate (grow after an improving step, halve
    and drop the velocity after a worsening one). ``solver="lbfgs"`` hands
    the same loss and gradient to scipy's L-BFGS-B. Either way the accepted
    training loss never increases.
    """

    def __init__(self, hidden_layer_sizes=(10,), alpha: float = 1e-4, solver: str = "momentum",
                 learning_rate: float = 0.1, momentum: float = 0.1, max_iter: int = 1000,
                 tol: float = 1e-8, seed: int = 0):
        if isinstance(hidden_layer_sizes, int):
            hidden_layer_sizes = (hidden_layer_sizes,)
        hidden_layer_sizes = tuple(int(h) for h in hidden_layer_sizes)
        if not hidden_layer_sizes or min(hidden_layer_sizes) < 1:
            raise ValueError(f"hidden layers need at least one unit, got {hidden_layer_sizes}")
        if solver not in SOLVERS:
            raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
        if alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha}")
        self.hidden_layer_sizes = hidden_layer_sizes
        self.alpha = alpha
        self.solver = solver
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed
        self.n_features_in: int | None = None

    def get_params(self) -> dict:
        return {"hidden_layer_sizes": list(self.hidden_layer_sizes), "alpha": self.alpha,
                "solver": self.solver, "learning_rate": self.learning_rate,
                "momentum": self.momentum, "max_iter": self.max_iter, "tol": self.tol,
                "seed": self.seed}

    def init_params(self, n_features: int) -> np.ndarray:
        layers = [n_features, *self.hidden_layer_sizes, 1]
        rng = np.random.default_rng(self.seed)
        weights, biases = [], []
        for fi, fo in _shapes(layers):
            bound = np.sqrt(6.0 / (fi + fo))
            weights.append(rng.uniform(-bound, bound, size=(fi, fo)))
            biases.append(rng.uniform(-bound, bound, size=fo))
        return pack(weights, biases)

    def fit(self, X, y):
        X, y = check_xy(X, y)
        self.layers_ = [X.shape[1], *self.hidden_layer_sizes, 1]
        self.y_mean_ = float(np.mean(y))
        std = float(np.std(y))
        self.y_scale_ = std if std > 0 else 1.0
        t = (y - self.y_mean_) / self.y_scale_
        theta = self.init_params(X.shape[1])
        if self.solver == "lbfgs":
            theta, history = self._fit_lbfgs(theta, X, t)
        else:
            theta, history = self._fit_momentum(theta, X, t)
        self.theta_ = theta
        self.loss_curve_ = np.asarray(history)
        self.n_features_in = X.shape[1]
        return self

    def _fit_momentum(self, theta, X, t):
        lr = self.learning_rate
        velocity = np.zeros_like(theta)
        loss, grad = loss_and_grad(theta, self.layers_, X, t, self.alpha)
        history = [loss]
        for _ in range(self.max_iter):
            step = self.momentum * velocity - lr * grad
            trial = theta + step
            new_loss, new_grad = loss_and_grad(trial, self.layers_, X, t, self.alpha)
            if new_loss <= loss:
                improvement = loss - new_loss
                theta, loss, grad, velocity = trial, new_loss, new_grad, step
                history.append(loss)
                lr *= 1.05
                if improvement < self.tol:
                    break
            else:
                lr *= 0.5
                velocity = np.zeros_like(theta)
                if lr < 1e-12:
                    break
        self.n_iter_ = len(history) - 1
        return theta, history

    def _fit_lbfgs(self, theta, X, t):
        history = []

        def fun(p):
            return loss_and_grad(p, self.layers_, X, t, self.alpha)

        def record(intermediate_result):
            history.append(float(intermediate_result.fun))

        history.append(fun(theta)[0])
        res = optimize.minimize(fun, theta, jac=True, method="L-BFGS-B", callback=record,
                                options={"maxiter": self.max_iter, "ftol": 0.0,
                                         "gtol": 1e-10, "maxfun": 4 * self.max_iter})
        self.n_iter_ = int(res.nit)
        return res.x, history

    def predict(self, X) -> np.ndarray:
        if self.n_features_in is None:
            raise NotFittedError("model is not fitted")
        X = check_width(X, self.n_features_in)
        out = forward(self.theta_, self.layers_, X)[-1].ravel()
        return out * self.y_scale_ + self.y_mean_

    def get_state(self) -> tuple[dict, dict]:
        if self.n_features_in is None:
            raise NotFittedError("model is not fitted")
        meta = {"params": self.get_params(), "layers": list(self.layers_),
                "y_mean": self.y_mean_, "y_scale": self.y_scale_, "n_iter": self.n_iter_,
                "n_features_in": self.n_features_in}
        return meta, {"theta": self.theta_, "loss_curve": self.loss_curve_}

    @classmethod
    def from_state(cls, meta: dict, arrays: dict) -> "NeuralNetRegressor":
        model = cls(**meta["params"])
        model.layers_ = list(meta["layers"])
        model.y_mean_ = meta["y_mean"]
        model.y_scale_ = meta["y_scale"]
        model.n_iter_ = meta["n_iter"]
        model.n_features_in = meta["n_features_in"]
        model.theta_ = np.asarray(arrays["theta"])
        model.loss_curve_ = np.asarray(arrays["loss_curve"])
        return model
