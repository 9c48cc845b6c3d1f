"""Small shared pieces: score matrices, input coercion, softmax."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["ScoreMatrix", "DimensionMismatch", "as_csr", "check_width", "softmax", "log_softmax", "argmax_lowest"]


class DimensionMismatch(ValueError):
    """Feature matrix width does not match what the model was trained on."""


@dataclass(frozen=True)
class ScoreMatrix:
    values: np.ndarray
    is_probability: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def predict(self) -> np.ndarray:
        return argmax_lowest(self.values)

    def pseudo_probabilities(self) -> np.ndarray:
        """Per-column min-max scaling of raw margins into [0, 1].

        Rows are deliberately not renormalized: that would reorder scores
        within a column and change rank-based metrics. Real probabilities are
        returned untouched.
        """
        if self.is_probability:
            return self.values
        v = self.values
        lo, hi = v.min(axis=0), v.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        return (v - lo) / span


def as_csr(X) -> sp.csr_matrix:
    """Accept a DocTermMatrix, any scipy sparse matrix or a dense array."""
    if hasattr(X, "matrix") and hasattr(X, "mode"):
        X = X.matrix
    if sp.issparse(X):
        out = sp.csr_matrix(X, dtype=np.float64)
    else:
        out = sp.csr_matrix(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    out.eliminate_zeros()
    out.sort_indices()
    return out


def check_width(X: sp.csr_matrix, expected: int) -> None:
    if X.shape[1] != expected:
        raise DimensionMismatch(f"dimension mismatch: input has {X.shape[1]} features, model expects {expected}")


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def argmax_lowest(values: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index."""
    return np.argmax(values, axis=1)
