"""Labeled tweet datasets: loading, cleaning, splitting and label encoding."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "CATEGORIES",
    "REJECT",
    "Document",
    "LabeledDataset",
    "CleanReport",
    "LabelEncoder",
    "DatasetError",
    "normalize_tag",
    "load_dataset",
    "save_dataset",
    "clean",
    "split",
    "encode_labels",
]

CATEGORIES = ("ST", "PT", "HT", "BN", "ED", "SP", "EN", "SI", "RE", "GM", "WB", "NW")
CATEGORY_NAMES = {
    "ST": "Science & Technology",
    "PT": "Politics",
    "HT": "Health",
    "BN": "Business",
    "ED": "Education",
    "SP": "Sports",
    "EN": "Entertainment",
    "SI": "Social Issues",
    "RE": "Religion",
    "GM": "General Admin & Management",
    "WB": "Well Being",
    "NW": "News",
}
REJECT = "RJ"
_VALID = frozenset(CATEGORIES)
_NEWS_RE = re.compile(r"^\s*NW\s*-\s*([A-Za-z]+)\s*$", re.IGNORECASE)


class DatasetError(ValueError):
    """Malformed or unusable dataset input."""


@dataclass(frozen=True)
class Document:
    id: str
    text: str


@dataclass(frozen=True)
class LabeledDataset:
    documents: tuple[Document, ...]
    tags: tuple[str, ...]
    provenance: str = ""
    # per-item extra columns (bootstrap round/query/source, ...)
    meta: tuple[dict, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "documents", tuple(self.documents))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.documents) != len(self.tags):
            raise ValueError("documents and tags differ in length")
        if self.meta is not None:
            object.__setattr__(self, "meta", tuple(dict(m) for m in self.meta))
            if len(self.meta) != len(self.documents):
                raise ValueError("meta and documents differ in length")

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[tuple[Document, str]]:
        return iter(zip(self.documents, self.tags))

    @property
    def texts(self) -> list[str]:
        return [d.text for d in self.documents]

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def subset(self, indices: Sequence[int], provenance: str | None = None) -> "LabeledDataset":
        idx = list(indices)
        return LabeledDataset(
            documents=[self.documents[i] for i in idx],
            tags=[self.tags[i] for i in idx],
            provenance=self.provenance if provenance is None else provenance,
            meta=None if self.meta is None else [self.meta[i] for i in idx],
        )

    def concat(self, other: "LabeledDataset", provenance: str | None = None) -> "LabeledDataset":
        meta = None
        if self.meta is not None or other.meta is not None:
            meta = list(self.meta or [{}] * len(self)) + list(other.meta or [{}] * len(other))
        return LabeledDataset(
            documents=self.documents + other.documents,
            tags=self.tags + other.tags,
            provenance=provenance or f"{self.provenance}+{other.provenance}",
            meta=meta,
        )

    def class_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(self.tags).items()))


@dataclass(frozen=True)
class CleanReport:
    dropped_missing: int = 0
    dropped_invalid_tag: int = 0
    dropped_rejected: int = 0
    retained: int = 0
    invalid_tag_histogram: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.dropped_missing + self.dropped_invalid_tag + self.dropped_rejected + self.retained

    def to_dict(self) -> dict:
        return {
            "dropped_missing": self.dropped_missing,
            "dropped_invalid_tag": self.dropped_invalid_tag,
            "dropped_rejected": self.dropped_rejected,
            "retained": self.retained,
            "invalid_tag_histogram": dict(sorted(self.invalid_tag_histogram.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def normalize_tag(raw: str | None, news_as_subtag: bool = False) -> str:
    """Collapse composite news tags ``NW - XX`` to ``NW`` (or ``XX``)."""
    if raw is None:
        return ""
    raw = raw.strip()
    m = _NEWS_RE.match(raw)
    if m:
        return m.group(1) if news_as_subtag else "NW"
    return raw


def load_dataset(path: str | Path, format: str | None = None, news_as_subtag: bool = False) -> LabeledDataset:
    """Read a ``text,tag`` CSV or a JSON-lines file.

    Rows keep their file order. An ``id`` column is used when present,
    otherwise ids are row ordinals. Any other columns are kept as per-item
    metadata.
    """
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".json", ".ndjson") else "csv"
    if format not in ("csv", "jsonl"):
        raise DatasetError(f"unknown dataset format {format!r}")
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    raw = path.read_bytes().decode("utf-8", errors="replace")
    if format == "csv":
        rows = _read_csv_rows(raw, path)
    else:
        rows = _read_jsonl_rows(raw, path)

    docs, tags, metas = [], [], []
    for ordinal, (row, _line) in enumerate(rows):
        doc_id = row.pop("id", None)
        doc_id = str(ordinal) if doc_id in (None, "") else str(doc_id)
        text = row.pop("text", None)
        tag = row.pop("tag", None)
        docs.append(Document(doc_id, "" if text is None else text))
        tags.append(normalize_tag(tag, news_as_subtag))
        metas.append(row)
    has_meta = any(metas)
    return LabeledDataset(docs, tags, provenance=str(path), meta=metas if has_meta else None)


def _read_csv_rows(raw: str, path: Path) -> list[tuple[dict, int]]:
    reader = csv.reader(io.StringIO(raw, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        return []
    header = [h.strip().lstrip("﻿") for h in header]
    if "text" not in header or "tag" not in header:
        raise DatasetError(f"{path}: header must contain 'text' and 'tag' columns, got {header}")
    rows = []
    try:
        for fields in reader:
            line = reader.line_num
            if not fields:
                continue
            if len(fields) != len(header):
                raise DatasetError(
                    f"{path}:{line}: malformed row, expected {len(header)} fields, got {len(fields)}"
                )
            rows.append((dict(zip(header, fields)), line))
    except csv.Error as exc:
        raise DatasetError(f"{path}:{reader.line_num}: malformed row ({exc})") from exc
    return rows


def _read_jsonl_rows(raw: str, path: Path) -> list[tuple[dict, int]]:
    rows = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{line_no}: malformed row ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise DatasetError(f"{path}:{line_no}: malformed row, expected a JSON object")
        for key in ("text", "tag"):
            if obj.get(key) is not None and not isinstance(obj[key], str):
                raise DatasetError(f"{path}:{line_no}: malformed row, field {key!r} must be a string")
        rows.append((dict(obj), line_no))
    return rows


def save_dataset(ds: LabeledDataset, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix.lower() in (".jsonl", ".json", ".ndjson") else "csv"
    meta_keys: list[str] = []
    if ds.meta is not None:
        for m in ds.meta:
            meta_keys.extend(k for k in m if k not in meta_keys)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "text", "tag", *meta_keys])
            for i, (doc, tag) in enumerate(ds):
                extra = ds.meta[i] if ds.meta is not None else {}
                writer.writerow([doc.id, doc.text, tag, *(extra.get(k, "") for k in meta_keys)])
    elif format == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for i, (doc, tag) in enumerate(ds):
                obj = {"id": doc.id, "text": doc.text, "tag": tag}
                if ds.meta is not None:
                    obj.update(ds.meta[i])
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    else:
        raise DatasetError(f"unknown dataset format {format!r}")


def clean(ds: LabeledDataset) -> tuple[LabeledDataset, CleanReport]:
    """Drop rows with empty text, rejected tags (RJ, any case) and unknown tags."""
    keep, tags = [], []
    missing = rejected = 0
    invalid: Counter = Counter()
    for i, (doc, tag) in enumerate(ds):
        code = (tag or "").strip().upper()
        if not doc.text.strip() or not code:
            missing += 1
        elif code == REJECT:
            rejected += 1
        elif code not in _VALID:
            invalid[tag.strip()] += 1
        else:
            keep.append(i)
            tags.append(code)
    out = ds.subset(keep)
    out = LabeledDataset(out.documents, tags, ds.provenance, out.meta)
    report = CleanReport(
        dropped_missing=missing,
        dropped_invalid_tag=sum(invalid.values()),
        dropped_rejected=rejected,
        retained=len(keep),
        invalid_tag_histogram=dict(invalid),
    )
    return out, report


def _train_size(n: int, train_ratio: float) -> int:
    # exact decimal arithmetic so that e.g. 0.7 * 10 is 7, not 6.999...
    return math.floor(Decimal(str(train_ratio)) * n)


def split(
    ds: LabeledDataset, train_ratio: float = 0.75, seed: int = 0, stratify: bool = False
) -> tuple[LabeledDataset, LabeledDataset]:
    """Shuffle with ``seed`` and cut off the first ``floor(n * train_ratio)`` items.

    With ``stratify`` each class is shuffled separately and per-class train
    quotas are allotted by largest remainder, so the total train size is still
    ``floor(n * train_ratio)``.
    """
    n = len(ds)
    if n == 0:
        raise DatasetError("cannot split an empty dataset")
    if not 0 < train_ratio < 1:
        raise DatasetError(f"train_ratio must be in (0, 1), got {train_ratio}")
    n_train = _train_size(n, train_ratio)
    rng = np.random.default_rng(seed)
    if not stratify:
        order = rng.permutation(n)
        train_idx, test_idx = order[:n_train], order[n_train:]
    else:
        by_class: dict[str, list[int]] = {}
        for i, t in enumerate(ds.tags):
            by_class.setdefault(t, []).append(i)
        classes = sorted(by_class)
        exact = [Decimal(str(train_ratio)) * len(by_class[c]) for c in classes]
        quota = [math.floor(e) for e in exact]
        remainder_order = sorted(range(len(classes)), key=lambda j: (-(exact[j] - quota[j]), j))
        for j in remainder_order[: n_train - sum(quota)]:
            quota[j] += 1
        train_parts, test_parts = [], []
        for c, q in zip(classes, quota):
            members = np.asarray(by_class[c])[rng.permutation(len(by_class[c]))]
            train_parts.append(members[:q])
            test_parts.append(members[q:])
        train_idx = rng.permutation(np.concatenate(train_parts))
        test_idx = rng.permutation(np.concatenate(test_parts))
    return (
        ds.subset(train_idx.tolist(), provenance=f"{ds.provenance}[train]"),
        ds.subset(test_idx.tolist(), provenance=f"{ds.provenance}[test]"),
    )


@dataclass(frozen=True)
class LabelEncoder:
    classes: tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def code_to_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.classes)}

    def encode(self, tags: Sequence[str]) -> np.ndarray:
        lookup = self.code_to_index
        try:
            return np.array([lookup[t] for t in tags], dtype=np.int64)
        except KeyError as exc:
            raise DatasetError(f"tag {exc.args[0]!r} not known to the label encoder") from None

    def decode(self, indices) -> list[str]:
        return [self.classes[int(i)] for i in indices]


def encode_labels(ds: LabeledDataset) -> tuple[np.ndarray, LabelEncoder]:
    bad = sorted({t for t in ds.tags if t not in _VALID})
    if bad:
        raise DatasetError(f"dataset must be cleaned before encoding; found tags {bad}")
    enc = LabelEncoder(tuple(sorted(set(ds.tags))))
    return enc.encode(ds.tags), enc
