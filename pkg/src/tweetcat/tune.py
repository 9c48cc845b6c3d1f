"""Randomized hyperparameter search with seeded k-fold cross-validation."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .base import as_csr
from .evaluate import accuracy, auc_ovr, confusion, macro_prf

__all__ = [
    "Choice",
    "Uniform",
    "LogUniform",
    "Grid",
    "ParamSpace",
    "parse_distribution",
    "kfold_indices",
    "Trial",
    "SearchResult",
    "random_search",
    "score_predictions",
    "SCORINGS",
]

SCORINGS = ("accuracy", "macro_f1", "auc")


@dataclass(frozen=True)
class Choice:
    values: tuple

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("choice needs at least one value")

    def points(self) -> tuple:
        return tuple(self.values)

    def sample(self, rng: np.random.Generator):
        return self.values[int(rng.integers(len(self.values)))]


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise ValueError(f"invalid bounds [{self.lo}, {self.hi}]")

    def points(self):
        return None

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class LogUniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0 < self.lo <= self.hi) or not math.isfinite(self.hi):
            raise ValueError(f"log-uniform bounds must satisfy 0 < lo <= hi, got [{self.lo}, {self.hi}]")

    def points(self):
        return None

    def sample(self, rng: np.random.Generator) -> float:
        return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))


@dataclass(frozen=True)
class Grid:
    """Arithmetic grid lo, lo + step, ..., up to hi inclusive."""

    lo: float
    hi: float
    step: float

    def __post_init__(self) -> None:
        if self.step <= 0 or self.lo > self.hi or not all(map(math.isfinite, (self.lo, self.hi, self.step))):
            raise ValueError(f"invalid grid ({self.lo}, {self.hi}, {self.step})")

    def points(self) -> tuple:
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        # rounding strips the drift of repeated float addition (2.0 + 3*0.1 -> 2.3)
        return tuple(round(self.lo + i * self.step, 12) for i in range(n))

    def sample(self, rng: np.random.Generator) -> float:
        pts = self.points()
        return pts[int(rng.integers(len(pts)))]


Distribution = Choice | Uniform | LogUniform | Grid


@dataclass(frozen=True)
class ParamSpace:
    dims: dict  # name -> distribution

    def __post_init__(self) -> None:
        if not self.dims:
            raise ValueError("parameter space is empty")

    @property
    def is_finite(self) -> bool:
        return all(d.points() is not None for d in self.dims.values())

    def grid(self) -> list[dict]:
        """Every point of a finite space, in lexicographic order of the dimension values."""
        if not self.is_finite:
            raise ValueError("space has continuous dimensions")
        names = sorted(self.dims)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.dims[n].points() for n in names))]

    def sample(self, n_iter: int, rng: np.random.Generator) -> list[dict]:
        """Finite spaces are sampled without replacement until exhausted."""
        if self.is_finite:
            pts = self.grid()
            order = rng.permutation(len(pts))[: min(n_iter, len(pts))]
            return [pts[i] for i in order]
        names = sorted(self.dims)
        return [{n: self.dims[n].sample(rng) for n in names} for _ in range(n_iter)]

    def to_dict(self) -> dict:
        out = {}
        for name, d in self.dims.items():
            if isinstance(d, Choice):
                out[name] = {"choice": list(d.values)}
            elif isinstance(d, Grid):
                out[name] = {"grid": [d.lo, d.hi, d.step]}
            elif isinstance(d, LogUniform):
                out[name] = {"loguniform": [d.lo, d.hi]}
            else:
                out[name] = {"uniform": [d.lo, d.hi]}
        return out


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text


def parse_distribution(text: str) -> Distribution:
    """Parse ``choice:a,b,c``, ``uniform:lo,hi``, ``loguniform:lo,hi`` or ``grid:lo,hi,step``."""
    kind, _, rest = text.partition(":")
    args = [a.strip() for a in rest.split(",") if a.strip()]
    kind = kind.strip().lower()
    if kind == "choice":
        return Choice(tuple(_number(a) for a in args))
    nums = [float(a) for a in args]
    if kind == "uniform" and len(nums) == 2:
        return Uniform(*nums)
    if kind == "loguniform" and len(nums) == 2:
        return LogUniform(*nums)
    if kind == "grid" and len(nums) == 3:
        return Grid(*nums)
    raise ValueError(f"cannot parse distribution {text!r}")


def kfold_indices(y, folds: int = 3, seed: int = 0, stratified: bool = True) -> list[np.ndarray]:
    """Disjoint test-index arrays covering all rows; sizes differ by at most one.

    Stratified: rows are grouped by class (each class shuffled) and dealt to
    folds round-robin, which keeps class ratios and global balance together.
    """
    y = np.asarray(y)
    n = y.size
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if folds > n:
        raise ValueError(f"{folds} folds for {n} samples")
    rng = np.random.default_rng(seed)
    if stratified:
        classes, counts = np.unique(y, return_counts=True)
        if counts.min() < folds:
            small = classes[counts < folds].tolist()
            raise ValueError(f"stratified {folds}-fold split impossible: classes {small} have fewer than {folds} samples")
        order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in classes])
    else:
        order = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % folds
    return [np.flatnonzero(assignment == f) for f in range(folds)]


def score_predictions(scoring: str, y_true, scores, n_classes: int) -> float:
    if scoring == "accuracy":
        return accuracy(confusion(y_true, scores.predict(), n_classes))
    if scoring == "macro_f1":
        return macro_prf(confusion(y_true, scores.predict(), n_classes)).f1
    if scoring == "auc":
        return auc_ovr(y_true, scores.values).macro
    raise ValueError(f"unknown scoring {scoring!r}; choose from {SCORINGS}")


@dataclass
class Trial:
    params: dict
    fold_scores: list
    mean_score: float


@dataclass
class SearchResult:
    model_kind: str
    scoring: str
    folds: int
    seed: int
    trials: list
    best_index: int
    best_model: object = None
    fixed_params: dict = field(default_factory=dict)

    @property
    def best(self) -> Trial:
        return self.trials[self.best_index]

    @property
    def best_params(self) -> dict:
        return self.best.params

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "scoring": self.scoring,
            "folds": self.folds,
            "seed": self.seed,
            "fixed_params": _plain(self.fixed_params),
            "best_index": self.best_index,
            "best_params": _plain(self.best.params),
            "best_score": self.best.mean_score,
            "trials": [
                {"params": _plain(t.params), "fold_scores": list(t.fold_scores), "mean_score": t.mean_score}
                for t in self.trials
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def leaderboard(self, top: int | None = None) -> str:
        names = sorted({k for t in self.trials for k in t.params})
        ranked = sorted(range(len(self.trials)), key=lambda i: (-self.trials[i].mean_score, i))
        if top is not None:
            ranked = ranked[:top]
        header = ["rank", "trial", *names, f"mean_{self.scoring}"]
        rows = [
            [str(r + 1), str(i), *(_fmt(self.trials[i].params.get(n)) for n in names), f"{self.trials[i].mean_score:.4f}"]
            for r, i in enumerate(ranked)
        ]
        widths = [max(len(h), *(len(row[c]) for row in rows)) for c, h in enumerate(header)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
        return "\n".join(lines)


def _fmt(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _plain(d: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def _run_trial(kind, params, X, y, fold_idx, scoring, n_classes):
    from .models import fit_model, model_scores

    n = X.shape[0]
    scores = []
    for test in fold_idx:
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        model = fit_model(kind, X[train], y[train], params, n_classes=n_classes)
        scores.append(score_predictions(scoring, y[test], model_scores(model, X[test]), n_classes))
    return scores


def random_search(
    model_kind: str,
    space: ParamSpace,
    X,
    y,
    folds: int = 3,
    n_iter: int = 10,
    scoring: str = "accuracy",
    seed: int = 0,
    stratified: bool = True,
    fixed_params: dict | None = None,
    refit: bool = True,
    n_jobs: int = 1,
) -> SearchResult:
    """Cross-validate ``n_iter`` sampled parameter points on one shared fold
    partition and return every trial; the best (earliest on ties) is refit on
    all rows when ``refit`` is set. Results do not depend on ``n_jobs``."""
    from .models import fit_model, resolve_params

    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    if scoring not in SCORINGS:
        raise ValueError(f"unknown scoring {scoring!r}; choose from {SCORINGS}")
    X = as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    n_classes = int(y.max()) + 1
    fixed = dict(fixed_params or {})
    rng = np.random.default_rng(seed)
    fold_idx = kfold_indices(y, folds, seed, stratified)
    points = space.sample(n_iter, rng)
    full = [resolve_params(model_kind, {**fixed, **p}) for p in points]
    all_scores = Parallel(n_jobs=n_jobs)(
        delayed(_run_trial)(model_kind, params, X, y, fold_idx, scoring, n_classes) for params in full
    )
    trials = [Trial(p, list(s), float(np.mean(s))) for p, s in zip(points, all_scores)]
    best_index = 0
    for i, t in enumerate(trials):
        if t.mean_score > trials[best_index].mean_score:
            best_index = i
    assert all(trials[best_index].mean_score >= t.mean_score for t in trials)
    best_model = fit_model(model_kind, X, y, full[best_index], n_classes=n_classes) if refit else None
    return SearchResult(model_kind, scoring, folds, seed, trials, best_index, best_model, fixed)
