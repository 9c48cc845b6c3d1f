"""Majority-vote ground truth from several annotators, and per-topic overlap and
Cohen's kappa between each annotator and each ground truth."""

from __future__ import annotations

import csv
import enum
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CATEGORIES, CATEGORY_NAMES, DatasetError, normalize_tag

__all__ = [
    "GtRule",
    "AnnotationSet",
    "GroundTruth",
    "load_annotations",
    "save_annotations",
    "aggregate_gt",
    "topic_overlap",
    "kappa_stats",
    "cohen_kappa",
    "AgreementRow",
    "AgreementReport",
    "agreement_report",
    "random_annotations",
]

log = logging.getLogger(__name__)


class GtRule(enum.Enum):
    GT4YES = 4
    GT3YES = 3
    GT2YES = 2

    @property
    def threshold(self) -> int:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "GtRule":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown ground-truth rule {name!r}; choose from {[r.name for r in cls]}") from None


# column order of the printed table
TABLE_RULE_ORDER = (GtRule.GT2YES, GtRule.GT4YES, GtRule.GT3YES)


@dataclass(frozen=True)
class AnnotationSet:
    records: tuple[tuple[str, str, str], ...]  # (doc_id, annotator_id, topic)
    annotators_per_doc: int = 4

    def __post_init__(self) -> None:
        seen = set()
        per_doc: Counter = Counter()
        for doc, annotator, topic in self.records:
            if (doc, annotator) in seen:
                raise DatasetError(f"annotator {annotator!r} labelled document {doc!r} more than once")
            seen.add((doc, annotator))
            per_doc[doc] += 1
        over = sorted(d for d, c in per_doc.items() if c > self.annotators_per_doc)
        if over:
            raise DatasetError(f"documents with more than {self.annotators_per_doc} annotators: {over[:5]}")

    def doc_ids(self) -> list[str]:
        return list(dict.fromkeys(r[0] for r in self.records))

    def annotators(self) -> list[str]:
        return sorted({r[1] for r in self.records})

    def votes(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = defaultdict(list)
        for doc, _, topic in self.records:
            out[doc].append(topic)
        return dict(out)

    def by_annotator(self) -> dict[str, dict[str, str]]:
        out: dict[str, dict[str, str]] = defaultdict(dict)
        for doc, annotator, topic in self.records:
            out[annotator][doc] = topic
        return dict(out)


def load_annotations(path: str | Path, annotators_per_doc: int = 4) -> AnnotationSet:
    """Read a ``doc_id,annotator_id,topic`` CSV. Topics are matched case-insensitively."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file")
    records = []
    with path.open(newline="", encoding="utf-8", errors="replace") as fh:
        reader = csv.DictReader(fh)
        missing = {"doc_id", "annotator_id", "topic"} - set(reader.fieldnames or [])
        if missing:
            raise DatasetError(f"{path}: header lacks columns {sorted(missing)}")
        for row in reader:
            topic = normalize_tag(row["topic"])
            if topic not in CATEGORIES:
                raise DatasetError(f"{path}:{reader.line_num}: unknown topic {row['topic']!r}")
            records.append((row["doc_id"], row["annotator_id"], topic))
    return AnnotationSet(tuple(records), annotators_per_doc)


def save_annotations(ann: AnnotationSet, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["doc_id", "annotator_id", "topic"])
        w.writerows(ann.records)


@dataclass(frozen=True)
class GroundTruth:
    rule: GtRule
    labels: dict  # doc_id -> frozenset of YES topics (possibly empty)
    multi_label: frozenset  # docs with more than one YES topic
    excluded: tuple  # docs with fewer annotations than the rule threshold

    def single_labels(self, order=CATEGORIES) -> dict[str, str | None]:
        """One topic per doc for training: the first YES topic in class-index order."""
        rank = {c: i for i, c in enumerate(order)}
        return {d: (min(t, key=lambda c: rank.get(c, len(rank))) if t else None) for d, t in self.labels.items()}


def aggregate_gt(ann: AnnotationSet, rule: GtRule | str) -> GroundTruth:
    """A topic is YES for a document when at least ``rule.threshold`` annotators chose it."""
    rule = GtRule.parse(rule) if isinstance(rule, str) else rule
    labels, multi, excluded = {}, set(), []
    for doc, topics in ann.votes().items():
        if len(topics) < rule.threshold:
            excluded.append(doc)
            continue
        yes = frozenset(t for t, c in Counter(topics).items() if c >= rule.threshold)
        labels[doc] = yes
        if len(yes) > 1:
            multi.add(doc)
    if excluded:
        log.warning("%s: %d documents have fewer than %d annotations and were excluded", rule.name, len(excluded), rule.threshold)
    return GroundTruth(rule, labels, frozenset(multi), tuple(excluded))


def _aligned(a, b) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(a, dict) or isinstance(b, dict):
        if not (isinstance(a, dict) and isinstance(b, dict)) or a.keys() != b.keys():
            raise ValueError("judgements cover different document ids")
        keys = list(a)
        a = [a[k] for k in keys]
        b = [b[k] for k in keys]
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("need at least one judgement")
    return a, b


def topic_overlap(expert, gt) -> float:
    """Fraction of documents where both say YES or both say NO."""
    a, b = _aligned(expert, gt)
    return float(np.mean(a == b))


def kappa_stats(a, b) -> tuple[float, float, float]:
    """(po, pe, kappa) for two binary judgement vectors.

    When chance agreement pe is 1 (both raters constant and equal) kappa is
    undefined; by convention it is 1 if the raters agree everywhere, else 0.
    """
    a, b = _aligned(a, b)
    po = float(np.mean(a == b))
    pa, pb = float(a.mean()), float(b.mean())
    pe = pa * pb + (1 - pa) * (1 - pb)
    if pe >= 1.0:
        return po, pe, 1.0 if po == 1.0 else 0.0
    return po, pe, (po - pe) / (1 - pe)


def cohen_kappa(a, b) -> float:
    return kappa_stats(a, b)[2]


@dataclass(frozen=True)
class AgreementRow:
    rule: str
    topic: str
    annotator: str
    n_docs: int
    overlap: float
    po: float
    pe: float
    kappa: float


@dataclass
class AgreementReport:
    """Per (rule, topic, annotator) rows plus the annotator-mean summary.

    Each row satisfies overlap == po and kappa == (po - pe) / (1 - pe) when pe < 1.
    The summary averages overlap and kappa over annotators, which is one
    reading of how a single value per topic and rule is obtained.
    """

    rows: list
    summary: dict  # rule -> topic -> {"O": mean overlap, "K": mean kappa, "n_annotators": int}
    topics: list
    excluded: dict = field(default_factory=dict)
    multi_label: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [r.__dict__ for r in self.rows],
            "summary": self.summary,
            "topics": self.topics,
            "excluded": self.excluded,
            "multi_label": self.multi_label,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        rules = [r for r in TABLE_RULE_ORDER if r.name in self.summary]
        header = ["Topic"] + [f"{r.name}({m})" for r in rules for m in ("O", "K")]
        body = []
        for t in self.topics:
            label = f"{CATEGORY_NAMES.get(t, t)} ({t})"
            cells = []
            for r in rules:
                s = self.summary[r.name].get(t)
                cells += ["-", "-"] if s is None else [f"{s['O']:.2f}", f"{s['K']:.2f}"]
            body.append([label, *cells])
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
        lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines.append("-+-".join("-" * w for w in widths))
        lines += [" | ".join(c.ljust(w) for c, w in zip(b, widths)) for b in body]
        return "\n".join(lines)


def agreement_report(ann: AnnotationSet, rules=tuple(GtRule), topics=CATEGORIES) -> AgreementReport:
    """Compare every annotator with every ground truth, one binary problem per topic.

    An annotator is scored on the documents they labelled that the rule did not
    exclude; topics nobody chose still get rows (kappa from the pe = 1 convention).
    """
    rules = [GtRule.parse(r) if isinstance(r, str) else r for r in rules]
    by_annotator = ann.by_annotator()
    rows, summary, excluded, multi = [], {}, {}, {}
    for rule in rules:
        gt = aggregate_gt(ann, rule)
        excluded[rule.name] = list(gt.excluded)
        multi[rule.name] = sorted(gt.multi_label)
        summary[rule.name] = {}
        for topic in topics:
            o_vals, k_vals = [], []
            for annotator in sorted(by_annotator):
                picks = by_annotator[annotator]
                docs = [d for d in picks if d in gt.labels]
                if not docs:
                    continue
                expert = [picks[d] == topic for d in docs]
                truth = [topic in gt.labels[d] for d in docs]
                po, pe, k = kappa_stats(expert, truth)
                rows.append(AgreementRow(rule.name, topic, annotator, len(docs), po, po, pe, k))
                o_vals.append(po)
                k_vals.append(k)
            if o_vals:
                summary[rule.name][topic] = {
                    "O": float(np.mean(o_vals)),
                    "K": float(np.mean(k_vals)),
                    "n_annotators": len(o_vals),
                }
    meta = {"aggregation": "per-annotator binary kappa against each ground truth, averaged over annotators"}
    return AgreementReport(rows, summary, list(topics), excluded, multi, meta)


def random_annotations(
    n_docs: int, n_annotators: int = 4, topics=CATEGORIES, seed: int = 0, agreement: float = 0.0
) -> AnnotationSet:
    """Seeded synthetic annotations. Each document has a hidden topic; every
    annotator reports it with probability ``agreement`` and otherwise picks a
    topic uniformly at random."""
    rng = np.random.default_rng(seed)
    topics = tuple(topics)
    hidden = rng.integers(len(topics), size=n_docs)
    records = []
    for d in range(n_docs):
        for a in range(n_annotators):
            t = hidden[d] if rng.random() < agreement else rng.integers(len(topics))
            records.append((f"d{d}", f"a{a}", topics[int(t)]))
    return AnnotationSet(tuple(records), n_annotators)
