"""Multinomial Naive Bayes, multinomial logistic regression and one-vs-rest linear SVM."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .base import ScoreMatrix, as_csr, check_width, log_softmax, softmax
from .optimize import LbfgsConfig, ObjectiveFn, lbfgs_minimize

__all__ = [
    "NbModel",
    "LinearModel",
    "nb_fit",
    "lr_fit",
    "svm_fit",
    "linear_scores",
    "logistic_objective",
    "svm_objective",
]

log = logging.getLogger(__name__)


def _n_classes(y: np.ndarray, n_classes: int | None) -> int:
    k = int(y.max()) + 1 if n_classes is None else n_classes
    if y.size and (y.min() < 0 or y.max() >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    return k


@dataclass
class NbModel:
    alpha: float
    class_log_prior: np.ndarray
    feature_log_prob: np.ndarray
    feature_count: np.ndarray
    class_count: np.ndarray

    @property
    def n_features(self) -> int:
        return self.feature_log_prob.shape[1]

    @property
    def n_classes(self) -> int:
        return self.feature_log_prob.shape[0]


def nb_fit(X, y, alpha: float = 1.0, n_classes: int | None = None) -> NbModel:
    """Multinomial NB with additive (Laplace/Lidstone) smoothing ``alpha``."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    X = as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    if X.nnz and X.data.min() < 0:
        raise ValueError("Naive Bayes needs non-negative feature values")
    k = _n_classes(y, n_classes)
    class_count = np.bincount(y, minlength=k).astype(np.float64)
    if np.any(class_count == 0):
        missing = np.flatnonzero(class_count == 0).tolist()
        raise ValueError(f"classes {missing} have no training documents (K={k})")
    onehot = sp.csr_matrix((np.ones(y.size), (y, np.arange(y.size))), shape=(k, y.size))
    feature_count = np.asarray((onehot @ X).todense())
    smoothed = feature_count + alpha
    feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    class_log_prior = np.log(class_count) - np.log(class_count.sum())
    return NbModel(alpha, class_log_prior, feature_log_prob, feature_count, class_count)


@dataclass
class LinearModel:
    kind: str  # "logistic" | "svm"
    weights: np.ndarray  # K x V
    intercepts: np.ndarray  # K
    C: float
    penalty: str = "l2"
    status: str = ""
    trace: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]


def logistic_objective(X, y, C: float, n_classes: int) -> ObjectiveFn:
    """Summed multinomial cross-entropy plus ``||W||^2 / (2C)``; intercepts unpenalized.

    Parameters are packed as ``[W.ravel(), b]`` with W of shape (K, V).
    """
    X = as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    n, v = X.shape
    k = n_classes
    Y = np.zeros((n, k))
    Y[np.arange(n), y] = 1.0
    XT = X.T.tocsr()

    def value_and_grad(theta: np.ndarray) -> tuple[float, np.ndarray]:
        W = theta[: k * v].reshape(k, v)
        b = theta[k * v :]
        Z = np.asarray(X @ W.T) + b
        logp = log_softmax(Z)
        loss = -float(np.sum(Y * logp)) + float(np.sum(W * W)) / (2 * C)
        G = np.exp(logp) - Y
        gW = np.asarray(XT @ G).T + W / C
        gb = G.sum(axis=0)
        return loss, np.concatenate([gW.ravel(), gb])

    return ObjectiveFn(value_and_grad)


def lr_fit(X, y, C: float = 1.0, cfg: LbfgsConfig | None = None, n_classes: int | None = None) -> LinearModel:
    if C <= 0:
        raise ValueError("C must be > 0")
    X = as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    k = _n_classes(y, n_classes)
    v = X.shape[1]
    obj = logistic_objective(X, y, C, k)
    res = lbfgs_minimize(obj, np.zeros(k * v + k), cfg or LbfgsConfig())
    if res.status == "line_search_failed":
        log.warning("logistic regression: optimizer stopped early (%s)", res.status)
    W = res.x[: k * v].reshape(k, v).copy()
    b = res.x[k * v :].copy()
    return LinearModel("logistic", W, b, C, status=res.status, trace=res.trace)


def svm_objective(X, y_pm: np.ndarray, w: np.ndarray, C: float) -> float:
    """``0.5 ||w||^2 + C sum hinge`` for one binary problem; ``w`` includes the bias as last entry."""
    X = as_csr(X)
    margins = y_pm * (np.asarray(X @ w[:-1]).ravel() + w[-1])
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def _pegasos(
    X: sp.csr_matrix, y_pm: np.ndarray, lam: float, epochs: int, batch_size: int, rng, min_steps: int = 2000
) -> np.ndarray:
    """Mini-batch Pegasos on features augmented with a constant 1 column.

    Runs at least ``min_steps`` updates and returns the step-weighted average of
    the iterates (weight ``t`` for step ``t``).
    """
    n, v = X.shape
    w = np.zeros(v + 1)
    avg = np.zeros(v + 1)
    weight_sum = 0.0
    steps_per_epoch = -(-n // batch_size)
    epochs = max(epochs, -(-min_steps // steps_per_epoch))
    radius = 1.0 / np.sqrt(lam)
    t = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            t += 1
            batch = order[start : start + batch_size]
            Xb = X[batch]
            yb = y_pm[batch]
            margins = yb * (np.asarray(Xb @ w[:-1]).ravel() + w[-1])
            viol = margins < 1.0
            eta = 1.0 / (lam * t)
            w *= 1.0 - eta * lam
            if viol.any():
                coef = yb[viol] * (eta / len(batch))
                w[:-1] += np.asarray(Xb[viol].T @ coef).ravel()
                w[-1] += coef.sum()
            norm = np.sqrt(w @ w)
            if norm > radius:
                w *= radius / norm
            weight_sum += t
            avg += (t / weight_sum) * (w - avg)
    return avg


def svm_fit(
    X,
    y,
    C: float = 1.0,
    epochs: int = 20,
    seed: int = 0,
    batch_size: int = 32,
    n_classes: int | None = None,
) -> LinearModel:
    """One-vs-rest hinge-loss SVMs via seeded stochastic subgradient descent.

    Each binary problem minimizes ``0.5||w||^2 + C * sum hinge``, i.e. Pegasos
    with ``lambda = 1 / (C n)``. The bias is an extra constant feature, so it is
    regularized along with the weights. Class ``k`` draws its batches from
    ``default_rng([seed, k])``.
    """
    if C <= 0:
        raise ValueError("C must be > 0")
    X = as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    k = _n_classes(y, n_classes)
    if np.unique(y).size < 2:
        raise ValueError("SVM needs at least two classes in the training labels")
    n, v = X.shape
    lam = 1.0 / (C * n)
    W = np.zeros((k, v))
    b = np.zeros(k)
    for cls in range(k):
        y_pm = np.where(y == cls, 1.0, -1.0)
        w = _pegasos(X, y_pm, lam, epochs, min(batch_size, n), np.random.default_rng([seed, cls]))
        W[cls], b[cls] = w[:-1], w[-1]
    return LinearModel("svm", W, b, C)


def linear_scores(model: NbModel | LinearModel, X, posterior: bool = True) -> ScoreMatrix:
    """NB: posteriors (or joint log-likelihoods with ``posterior=False``);
    logistic: softmax probabilities; SVM: raw margins."""
    X = as_csr(X)
    check_width(X, model.n_features)
    if isinstance(model, NbModel):
        jll = np.asarray(X @ model.feature_log_prob.T) + model.class_log_prior
        if posterior:
            return ScoreMatrix(softmax(jll), True)
        return ScoreMatrix(jll, False)
    z = np.asarray(X @ model.weights.T) + model.intercepts
    if model.kind == "logistic":
        return ScoreMatrix(softmax(z), True)
    return ScoreMatrix(z, False)
