"""Vocabulary building and sparse term-document matrices.

Four weightings are supported: raw counts, TF-IDF, sublinear ("weighted")
TF-IDF and Okapi BM25. Matrices are stored as ``scipy.sparse.csr_matrix``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "MODES",
    "Vocabulary",
    "DocTermMatrix",
    "Bm25Params",
    "TextVectorizer",
    "build_vocabulary",
    "count_vectorize",
    "tfidf_transform",
    "bm25_transform",
    "write_coo",
    "read_coo",
]

MODES = ("count", "tfidf", "wtfidf", "bm25")


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    doc_freq: np.ndarray
    n_docs: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "doc_freq", np.asarray(self.doc_freq, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def term_to_index(self) -> dict[str, int]:
        # cached on first use; the dataclass is frozen so bypass __setattr__
        try:
            return self.__dict__["_index"]
        except KeyError:
            idx = {t: i for i, t in enumerate(self.terms)}
            object.__setattr__(self, "_index", idx)
            return idx

    def to_dict(self) -> dict:
        return {"terms": list(self.terms), "doc_freq": self.doc_freq.tolist(), "n_docs": self.n_docs}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(tuple(d["terms"]), np.asarray(d["doc_freq"]), int(d["n_docs"]))


@dataclass(frozen=True)
class DocTermMatrix:
    matrix: sp.csr_matrix
    mode: str

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown weighting mode {self.mode!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.5
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0 <= self.b <= 1:
            raise ValueError("b must lie in [0, 1]")


def build_vocabulary(
    docs: Sequence[Sequence[str]], min_df: int = 1, max_features: int | None = None
) -> Vocabulary:
    if len(docs) == 0:
        raise ValueError("cannot build a vocabulary from zero documents")
    df: Counter = Counter()
    for tokens in docs:
        df.update(set(tokens))
    kept = [(t, c) for t, c in df.items() if c >= min_df]
    if max_features is not None and len(kept) > max_features:
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        kept = kept[:max_features]
    if not kept:
        raise ValueError("empty vocabulary")
    kept.sort()
    return Vocabulary(tuple(t for t, _ in kept), np.array([c for _, c in kept]), len(docs))


def count_vectorize(docs: Sequence[Sequence[str]], vocab: Vocabulary) -> DocTermMatrix:
    index = vocab.term_to_index
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for tokens in docs:
        counts = Counter(index[t] for t in tokens if t in index)
        for col in sorted(counts):
            indices.append(col)
            data.append(counts[col])
        indptr.append(len(indices))
    m = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(docs), len(vocab)),
    )
    return DocTermMatrix(m, "count")


def _require_count(m: DocTermMatrix, vocab: Vocabulary) -> None:
    if m.mode != "count":
        raise ValueError(f"expected a count matrix, got mode {m.mode!r}")
    if m.shape[1] != len(vocab):
        raise ValueError(f"matrix has {m.shape[1]} columns but vocabulary has {len(vocab)} terms")


def tfidf_transform(m: DocTermMatrix, vocab: Vocabulary, sublinear: bool = False) -> DocTermMatrix:
    """Smoothed idf ``ln((1+n)/(1+df)) + 1`` times tf (or ``1 + ln tf``), rows L2-normalized."""
    _require_count(m, vocab)
    idf = np.log((1.0 + vocab.n_docs) / (1.0 + vocab.doc_freq)) + 1.0
    out = m.matrix.copy().astype(np.float64)
    if sublinear:
        out.data = 1.0 + np.log(out.data)
    out = out @ sp.diags(idf)
    out = sp.csr_matrix(out)
    norms = np.sqrt(np.asarray(out.multiply(out).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    out = sp.csr_matrix(sp.diags(1.0 / norms) @ out)
    out.eliminate_zeros()
    out.sort_indices()
    return DocTermMatrix(out, "wtfidf" if sublinear else "tfidf")


def bm25_transform(
    m: DocTermMatrix, vocab: Vocabulary, p: Bm25Params | None = None, avgdl: float | None = None
) -> DocTermMatrix:
    """Okapi BM25 term weights.

    ``avgdl`` defaults to the mean in-vocabulary length of ``m``'s rows; pass the
    training value when transforming held-out documents.
    """
    _require_count(m, vocab)
    p = p or Bm25Params()
    n = vocab.n_docs
    df = vocab.doc_freq.astype(np.float64)
    idf = np.log((n - df + 0.5) / (df + 0.5) + 1.0)
    counts = sp.csr_matrix(m.matrix, dtype=np.float64, copy=True)
    doc_len = np.asarray(counts.sum(axis=1)).ravel()
    if avgdl is None:
        avgdl = float(doc_len.mean()) if len(doc_len) else 0.0
    if avgdl <= 0:
        avgdl = 1.0
    row_of = np.repeat(np.arange(counts.shape[0]), np.diff(counts.indptr))
    tf = counts.data
    norm = p.k1 * (1.0 - p.b + p.b * doc_len[row_of] / avgdl)
    counts.data = idf[counts.indices] * tf * (p.k1 + 1.0) / (tf + norm)
    counts.eliminate_zeros()
    return DocTermMatrix(counts, "bm25")


@dataclass
class TextVectorizer:
    """Fit a vocabulary on training token lists, then weight any token lists."""

    mode: str = "tfidf"
    min_df: int = 1
    max_features: int | None = None
    bm25: Bm25Params = field(default_factory=Bm25Params)
    vocabulary: Vocabulary | None = None
    avgdl: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown weighting mode {self.mode!r}; choose from {MODES}")

    def fit(self, docs: Sequence[Sequence[str]]) -> "TextVectorizer":
        self.vocabulary = build_vocabulary(docs, self.min_df, self.max_features)
        counts = count_vectorize(docs, self.vocabulary)
        self.avgdl = float(counts.matrix.sum() / max(counts.shape[0], 1))
        return self

    def transform(self, docs: Sequence[Sequence[str]]) -> DocTermMatrix:
        if self.vocabulary is None:
            raise RuntimeError("vectorizer is not fitted")
        counts = count_vectorize(docs, self.vocabulary)
        if self.mode == "count":
            return counts
        if self.mode in ("tfidf", "wtfidf"):
            return tfidf_transform(counts, self.vocabulary, sublinear=self.mode == "wtfidf")
        return bm25_transform(counts, self.vocabulary, self.bm25, avgdl=self.avgdl)

    def fit_transform(self, docs: Sequence[Sequence[str]]) -> DocTermMatrix:
        return self.fit(docs).transform(docs)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "min_df": self.min_df,
            "max_features": self.max_features,
            "bm25": {"k1": self.bm25.k1, "b": self.bm25.b},
            "avgdl": self.avgdl,
        }

    @classmethod
    def from_dict(cls, d: dict, vocabulary: Vocabulary | None = None) -> "TextVectorizer":
        return cls(
            mode=d["mode"],
            min_df=d.get("min_df", 1),
            max_features=d.get("max_features"),
            bm25=Bm25Params(**d.get("bm25", {})),
            vocabulary=vocabulary,
            avgdl=d.get("avgdl"),
        )


def write_coo(m: DocTermMatrix, path: str | Path) -> None:
    """Write ``row col weight`` triplets after a ``% rows cols nnz mode`` header."""
    coo = m.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"% {m.shape[0]} {m.shape[1]} {coo.nnz} {m.mode}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {float(v)!r}\n")


def read_coo(path: str | Path) -> DocTermMatrix:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("%"):
        raise ValueError(f"{path}: missing coordinate header")
    _, rows, cols, nnz, mode = lines[0].split()
    trip = [ln.split() for ln in lines[1:] if ln.strip()]
    if len(trip) != int(nnz):
        raise ValueError(f"{path}: header announces {nnz} entries, found {len(trip)}")
    r = np.array([int(t[0]) for t in trip], dtype=np.int64)
    c = np.array([int(t[1]) for t in trip], dtype=np.int64)
    v = np.array([float(t[2]) for t in trip], dtype=np.float64)
    m = sp.csr_matrix((v, (r, c)), shape=(int(rows), int(cols)))
    return DocTermMatrix(m, mode)


def l2_row_norms(m: DocTermMatrix) -> np.ndarray:
    return np.sqrt(np.asarray(m.matrix.multiply(m.matrix).sum(axis=1)).ravel())

