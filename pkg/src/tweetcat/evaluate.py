"""Classification metrics: confusion matrix, precision/recall/F1, rank-based
one-vs-rest AUC, and the report object that bundles them."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
from scipy.stats import rankdata

from .base import ScoreMatrix

__all__ = [
    "confusion",
    "accuracy",
    "macro_prf",
    "binary_auc",
    "auc_ovr",
    "AucResult",
    "PrfResult",
    "EvalReport",
    "evaluate",
    "evaluate_scores",
    "confusion_csv",
    "confusion_svg",
]

log = logging.getLogger(__name__)


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """K x K counts; rows are true classes, columns predictions."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise ValueError("cannot build a confusion matrix from zero samples")
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred differ in length")
    for name, y in (("y_true", y_true), ("y_pred", y_pred)):
        if y.min() < 0 or y.max() >= n_classes:
            raise ValueError(f"{name} has labels outside [0, {n_classes})")
    return np.bincount(y_true * n_classes + y_pred, minlength=n_classes * n_classes).reshape(n_classes, n_classes)


def accuracy(cm: np.ndarray) -> float:
    return float(np.trace(cm) / cm.sum())


@dataclass(frozen=True)
class PrfResult:
    precision: float
    recall: float
    f1: float
    per_class_precision: tuple[float, ...]
    per_class_recall: tuple[float, ...]
    per_class_f1: tuple[float, ...]
    support: tuple[int, ...]
    average: str = "macro"


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(num.shape, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def macro_prf(cm: np.ndarray, weighted: bool = False) -> PrfResult:
    """Per-class precision, recall, F1 (0/0 taken as 0) and their unweighted mean.

    With ``weighted=True`` the average is weighted by true-class support instead.
    """
    cm = np.asarray(cm)
    if cm.size == 0 or cm.sum() == 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1)
    p = _ratio(tp, cm.sum(axis=0).astype(np.float64))
    r = _ratio(tp, support.astype(np.float64))
    f = _ratio(2 * p * r, p + r)
    if weighted:
        w = support / support.sum()
        avg = (float(p @ w), float(r @ w), float(f @ w))
    else:
        avg = (float(p.mean()), float(r.mean()), float(f.mean()))
    return PrfResult(
        *avg,
        tuple(p.tolist()),
        tuple(r.tolist()),
        tuple(f.tolist()),
        tuple(int(s) for s in support),
        "weighted" if weighted else "macro",
    )


def _auc_fraction(positive: np.ndarray, scores: np.ndarray) -> Fraction:
    """Mann-Whitney U / (P N) with ties counted as half, as an exact fraction."""
    ranks = rankdata(scores)  # average ranks; multiples of 1/2, exact in float64
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    twice_rank_sum = int(round(2 * float(ranks[positive].sum())))
    twice_u = twice_rank_sum - n_pos * (n_pos + 1)
    return Fraction(twice_u, 2 * n_pos * n_neg)


def binary_auc(positive, scores) -> float:
    positive = np.asarray(positive, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    if positive.all() or not positive.any():
        raise ValueError("binary AUC needs at least one positive and one negative")
    return float(_auc_fraction(positive, scores))


@dataclass(frozen=True)
class AucResult:
    macro: float
    per_class: tuple[float | None, ...]  # None where the class could not be evaluated
    skipped: tuple[int, ...]
    average: str = "macro"


def auc_ovr(y_true, scores: ScoreMatrix | np.ndarray, weighted: bool = False) -> AucResult:
    """One-vs-rest AUC for each column, averaged over classes that have both
    positives and negatives. Skipped classes are logged and listed."""
    values = scores.values if isinstance(scores, ScoreMatrix) else np.asarray(scores, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.int64)
    if values.ndim != 2 or values.shape[0] != y_true.size:
        raise ValueError("scores must be an n x K matrix aligned with y_true")
    per_class: list[Fraction | None] = []
    skipped = []
    for k in range(values.shape[1]):
        pos = y_true == k
        if pos.all() or not pos.any():
            per_class.append(None)
            skipped.append(k)
            continue
        per_class.append(_auc_fraction(pos, values[:, k]))
    evaluated = [(k, a) for k, a in enumerate(per_class) if a is not None]
    if not evaluated:
        raise ValueError("no class has both positive and negative samples; AUC undefined")
    if skipped:
        log.warning("AUC skipped classes %s (no positive or no negative samples)", skipped)
    if weighted:
        support = {k: int((y_true == k).sum()) for k, _ in evaluated}
        total = sum(support.values())
        macro = sum((a * support[k] for k, a in evaluated), Fraction(0)) / total
    else:
        macro = sum((a for _, a in evaluated), Fraction(0)) / len(evaluated)
    return AucResult(
        float(macro),
        tuple(None if a is None else float(a) for a in per_class),
        tuple(skipped),
        "weighted" if weighted else "macro",
    )


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    confusion: list  # K x K nested list
    classes: list
    per_class: dict
    n_test: int
    average: str = "macro"
    auc_skipped: list = field(default_factory=list)
    score_kind: str = "probability"
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(**d)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def metrics(self) -> dict:
        return {k: getattr(self, k) for k in ("accuracy", "precision", "recall", "f1", "auc")}


def evaluate_scores(y_true, scores: ScoreMatrix, classes=None, weighted: bool = False) -> EvalReport:
    """Assemble every metric from a score matrix.

    The AUC only looks at ranks, so raw SVM margins are used as they are; their
    min-max scaled pseudo-probabilities would give the same value.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    k = scores.values.shape[1]
    classes = list(classes) if classes is not None else [str(i) for i in range(k)]
    if len(classes) != k:
        raise ValueError(f"{len(classes)} class names for {k} score columns")
    cm = confusion(y_true, scores.predict(), k)
    prf = macro_prf(cm, weighted)
    auc = auc_ovr(y_true, scores.values, weighted)
    per_class = {
        c: {
            "precision": prf.per_class_precision[i],
            "recall": prf.per_class_recall[i],
            "f1": prf.per_class_f1[i],
            "auc": auc.per_class[i],
            "support": prf.support[i],
        }
        for i, c in enumerate(classes)
    }
    return EvalReport(
        accuracy=accuracy(cm),
        precision=prf.precision,
        recall=prf.recall,
        f1=prf.f1,
        auc=auc.macro,
        confusion=cm.tolist(),
        classes=classes,
        per_class=per_class,
        n_test=int(y_true.size),
        average=prf.average,
        auc_skipped=[classes[i] for i in auc.skipped],
        score_kind="probability" if scores.is_probability else "margin",
        meta={"auc_aggregation": f"one-vs-rest, {prf.average} mean over evaluable classes"},
    )


def evaluate(model, X_test, y_test, classes=None, weighted: bool = False) -> EvalReport:
    from .models import model_scores

    return evaluate_scores(y_test, model_scores(model, X_test), classes, weighted)


def confusion_csv(cm, classes) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\pred", *classes])
    for c, row in zip(classes, cm):
        w.writerow([c, *[int(v) for v in row]])
    return buf.getvalue()


def confusion_svg(cm, classes, title: str = "", cell: int = 40) -> str:
    """Shaded-grid rendering; shading is the row-normalized rate, numbers are counts."""
    cm = np.asarray(cm)
    k = len(classes)
    left, top = 60, 50 if title else 30
    width = left + k * cell + 20
    height = top + k * cell + 50
    rates = cm / np.maximum(cm.sum(axis=1, keepdims=True), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for i in range(k):
        for j in range(k):
            shade = int(round(255 * (1 - rates[i, j])))
            fill = f"rgb({shade},{shade},255)"
            x, y = left + j * cell, top + i * cell
            ink = "white" if rates[i, j] > 0.5 else "black"
            parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="#999"/>')
            parts.append(
                f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" text-anchor="middle" fill="{ink}">{int(cm[i, j])}</text>'
            )
        parts.append(f'<text x="{left - 6}" y="{top + i * cell + cell / 2 + 4}" text-anchor="end">{escape(classes[i])}</text>')
        parts.append(
            f'<text x="{left + i * cell + cell / 2}" y="{top + k * cell + 16}" text-anchor="middle">{escape(classes[i])}</text>'
        )
    parts.append(f'<text x="{left + k * cell / 2}" y="{top + k * cell + 36}" text-anchor="middle">predicted</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
