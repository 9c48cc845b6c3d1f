"""Feed-forward ReLU network with a softmax output layer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import ScoreMatrix, as_csr, check_width, log_softmax, softmax
from .optimize import AdamConfig, AdamState, LbfgsConfig, ObjectiveFn, adam_step_epoch, lbfgs_minimize

__all__ = ["MlpModel", "mlp_fit", "mlp_predict_proba", "mlp_objective", "glorot_init", "pack", "unpack"]


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list  # weights[i] has shape (layer_sizes[i], layer_sizes[i+1])
    biases: list
    alpha: float = 0.001
    activation: str = "relu"
    loss_trace: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]


def _shapes(layer_sizes):
    return [(a, b) for a, b in zip(layer_sizes[:-1], layer_sizes[1:])]


def pack(weights, biases) -> np.ndarray:
    return np.concatenate([p.ravel() for pair in zip(weights, biases) for p in pair])


def unpack(theta: np.ndarray, layer_sizes) -> tuple[list, list]:
    weights, biases = [], []
    i = 0
    for a, b in _shapes(layer_sizes):
        weights.append(theta[i : i + a * b].reshape(a, b))
        i += a * b
        biases.append(theta[i : i + b])
        i += b
    return weights, biases


def glorot_init(layer_sizes, rng: np.random.Generator) -> np.ndarray:
    weights, biases = [], []
    for a, b in _shapes(layer_sizes):
        limit = np.sqrt(6.0 / (a + b))
        weights.append(rng.uniform(-limit, limit, size=(a, b)))
        biases.append(np.zeros(b))
    return pack(weights, biases)


def _dense(X, rows=None) -> np.ndarray:
    if rows is not None:
        X = X[rows]
    return X.toarray() if hasattr(X, "toarray") else np.asarray(X)


def _loss_grad(theta, Xb, yb, layer_sizes, alpha):
    """Mean cross-entropy + (alpha/2)||W||^2 and its gradient, by backprop."""
    weights, biases = unpack(theta, layer_sizes)
    acts = [Xb]
    h = Xb
    for W, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(h @ W + b, 0.0)
        acts.append(h)
    logits = h @ weights[-1] + biases[-1]
    logp = log_softmax(logits)
    n = Xb.shape[0]
    loss = -float(logp[np.arange(n), yb].mean()) + 0.5 * alpha * sum(float(np.sum(W * W)) for W in weights)
    delta = np.exp(logp)
    delta[np.arange(n), yb] -= 1.0
    delta /= n
    gW, gb = [None] * len(weights), [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        gW[i] = acts[i].T @ delta + alpha * weights[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (acts[i] > 0)
    return loss, pack(gW, gb)


def mlp_objective(X, y, layer_sizes, alpha: float = 0.001) -> ObjectiveFn:
    """Full-batch objective over all rows of X, for L-BFGS training and gradient checks."""
    Xd = _dense(as_csr(X))
    y = np.asarray(y, dtype=np.int64)
    return ObjectiveFn(lambda theta: _loss_grad(theta, Xd, y, tuple(layer_sizes), alpha))


def mlp_fit(
    X,
    y,
    hidden_layer_sizes=(46, 44),
    alpha: float = 0.001,
    adam: AdamConfig | None = None,
    seed: int = 1,
    solver: str = "adam",
    max_iter: int | None = None,
    n_classes: int | None = None,
) -> MlpModel:
    """Train by minibatch Adam (default) or full-batch L-BFGS.

    Sparse rows are densified one minibatch at a time. ``max_iter`` overrides
    the epoch count (Adam) or iteration cap (L-BFGS).
    """
    if any(h < 1 for h in hidden_layer_sizes):
        raise ValueError("hidden layer sizes must be >= 1")
    X = as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    k = int(y.max()) + 1 if n_classes is None else n_classes
    sizes = (X.shape[1], *hidden_layer_sizes, k)
    rng = np.random.default_rng(seed)
    theta = glorot_init(sizes, rng)
    trace = []
    if solver == "adam":
        cfg = adam or AdamConfig()
        epochs = cfg.max_iter if max_iter is None else max_iter
        state = AdamState.zeros(theta.size)

        def batch_fn(params, rows):
            return _loss_grad(params, _dense(X, rows), y[rows], sizes, alpha)

        for epoch in range(epochs):
            try:
                theta, state, loss = adam_step_epoch(batch_fn, theta, state, cfg, X.shape[0], rng)
            except FloatingPointError as exc:
                raise FloatingPointError(f"epoch {epoch}: {exc}") from None
            trace.append(loss)
    elif solver == "lbfgs":
        obj = mlp_objective(X, y, sizes, alpha)
        res = lbfgs_minimize(obj, theta, LbfgsConfig(max_iter=200 if max_iter is None else max_iter))
        theta, trace = res.x, res.trace
    else:
        raise ValueError(f"unknown solver {solver!r}")
    weights, biases = unpack(theta.copy(), sizes)
    return MlpModel(sizes, weights, biases, alpha, "relu", trace)


def mlp_predict_proba(model: MlpModel, X) -> ScoreMatrix:
    X = as_csr(X)
    check_width(X, model.n_features)
    out = np.empty((X.shape[0], model.n_classes))
    for start in range(0, X.shape[0], 2048):
        h = _dense(X[start : start + 2048])
        for W, b in zip(model.weights[:-1], model.biases[:-1]):
            h = np.maximum(h @ W + b, 0.0)
        out[start : start + 2048] = softmax(h @ model.weights[-1] + model.biases[-1])
    return ScoreMatrix(out, True)
