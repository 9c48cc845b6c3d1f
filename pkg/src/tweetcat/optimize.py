"""L-BFGS (two-loop recursion, backtracking Armijo line search) and Adam."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ObjectiveFn",
    "LbfgsConfig",
    "LbfgsResult",
    "AdamConfig",
    "AdamState",
    "two_loop_direction",
    "lbfgs_minimize",
    "adam_update",
    "adam_step_epoch",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectiveFn:
    """Differentiable objective given as a joint value-and-gradient callable."""

    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]]

    def value(self, x: np.ndarray) -> float:
        return self.value_and_grad(x)[0]

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.value_and_grad(x)[1]


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int | None = 10  # None keeps every curvature pair
    max_iter: int = 200
    grad_tol: float = 1e-6
    armijo_c: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self) -> None:
        if self.memory is not None and self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.grad_tol <= 0 or self.max_iter < 0:
            raise ValueError("invalid L-BFGS tolerances")


@dataclass
class LbfgsResult:
    x: np.ndarray
    fun: float
    trace: list[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False
    status: str = ""


def two_loop_direction(grad: np.ndarray, s_hist, y_hist) -> np.ndarray:
    """Return ``-H grad`` for the L-BFGS inverse-Hessian approximation H.

    ``s_hist``/``y_hist`` are ordered oldest first. The initial matrix is
    ``gamma * I`` with ``gamma = s'y / y'y`` from the newest pair.
    """
    q = np.array(grad, dtype=np.float64, copy=True)
    k = len(s_hist)
    if k == 0:
        return -q
    rho = [1.0 / float(y @ s) for s, y in zip(s_hist, y_hist)]
    alpha = np.empty(k)
    for i in range(k - 1, -1, -1):
        alpha[i] = rho[i] * float(s_hist[i] @ q)
        q -= alpha[i] * y_hist[i]
    s, y = s_hist[-1], y_hist[-1]
    r = q * (float(s @ y) / float(y @ y))
    for i in range(k):
        beta = rho[i] * float(y_hist[i] @ r)
        r += s_hist[i] * (alpha[i] - beta)
    return -r


def lbfgs_minimize(f: ObjectiveFn, x0: np.ndarray, cfg: LbfgsConfig | None = None) -> LbfgsResult:
    cfg = cfg or LbfgsConfig()
    x = np.array(x0, dtype=np.float64, copy=True)
    fx, g = f.value_and_grad(x)
    if not np.isfinite(fx) or not np.all(np.isfinite(g)):
        raise ValueError("objective or gradient is not finite at the starting point")
    s_hist: deque = deque(maxlen=cfg.memory)
    y_hist: deque = deque(maxlen=cfg.memory)
    trace = [float(fx)]
    status = "max_iter"
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if np.max(np.abs(g)) <= cfg.grad_tol:
            converged, status, it = True, "grad_tol", it - 1
            break
        d = two_loop_direction(g, s_hist, y_hist)
        slope = float(g @ d)
        if slope >= 0:
            s_hist.clear()
            y_hist.clear()
            d = -g
            slope = -float(g @ g)
        # scale the very first steepest-descent step so it is not absurdly long
        t = 1.0 if s_hist else min(1.0, 1.0 / max(np.max(np.abs(g)), 1e-12))
        for _ in range(cfg.max_backtracks):
            x_new = x + t * d
            f_new, g_new = f.value_and_grad(x_new)
            if np.isfinite(f_new) and f_new <= fx + cfg.armijo_c * t * slope:
                break
            t *= cfg.shrink
        else:
            status = "line_search_failed"
            log.warning("L-BFGS line search failed at iteration %d; returning best iterate", it)
            it -= 1
            break
        s = x_new - x
        y = g_new - g
        if float(s @ y) > 1e-12 * float(y @ y):
            s_hist.append(s)
            y_hist.append(y)
        x, fx, g = x_new, f_new, g_new
        trace.append(float(fx))
    else:
        if np.max(np.abs(g)) <= cfg.grad_tol:
            converged, status = True, "grad_tol"
    return LbfgsResult(x=x, fun=float(fx), trace=trace, n_iter=it, converged=converged, status=status)


@dataclass(frozen=True)
class AdamConfig:
    learning_rate_init: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 128
    max_iter: int = 100  # epochs

    def __post_init__(self) -> None:
        if self.learning_rate_init <= 0 or self.eps <= 0:
            raise ValueError("learning rate and eps must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_update(params: np.ndarray, grad: np.ndarray, state: AdamState, cfg: AdamConfig) -> np.ndarray:
    state.t += 1
    state.m = cfg.beta1 * state.m + (1 - cfg.beta1) * grad
    state.v = cfg.beta2 * state.v + (1 - cfg.beta2) * grad * grad
    m_hat = state.m / (1 - cfg.beta1**state.t)
    v_hat = state.v / (1 - cfg.beta2**state.t)
    return params - cfg.learning_rate_init * m_hat / (np.sqrt(v_hat) + cfg.eps)


def adam_step_epoch(
    f: Callable[[np.ndarray, np.ndarray], tuple[float, np.ndarray]],
    params: np.ndarray,
    state: AdamState,
    cfg: AdamConfig,
    n_samples: int,
    rng: np.random.Generator | int,
) -> tuple[np.ndarray, AdamState, float]:
    """Run one epoch of minibatch Adam.

    ``f(params, batch_indices)`` returns the minibatch loss and gradient.
    Returns updated params, state and the sample-weighted mean batch loss.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    order = rng.permutation(n_samples)
    total = 0.0
    for b, start in enumerate(range(0, n_samples, cfg.batch_size)):
        batch = order[start : start + cfg.batch_size]
        loss, grad = f(params, batch)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise FloatingPointError(f"non-finite loss or gradient at batch {b}")
        params = adam_update(params, grad, state, cfg)
        total += loss * len(batch)
    return params, state, total / max(n_samples, 1)

