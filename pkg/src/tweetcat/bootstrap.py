"""Grow a labelled corpus from a seed model: the highest-weighted terms of each
class become search queries, fetched documents inherit the class label, and
the model can be refit between rounds.

Document access goes through a small ``DocumentSource`` interface with a
local-directory implementation and an HTTP JSON client.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .corpus import Document, LabeledDataset
from .linear import LinearModel, NbModel
from .textprep import PrepConfig, preprocess
from .vectorize import TextVectorizer, Vocabulary

__all__ = [
    "DocumentSource",
    "SourceError",
    "LocalCorpusSource",
    "HttpSource",
    "TermWeight",
    "top_terms",
    "normalized_hash",
    "BalanceReport",
    "expand_corpus",
]

log = logging.getLogger(__name__)


class SourceError(RuntimeError):
    """A document source could not answer a query."""


class DocumentSource(Protocol):
    name: str

    def fetch(self, query: str, limit: int) -> list[Document]: ...


class LocalCorpusSource:
    """Keyword search over a directory of JSON-lines files (``{"id", "text"}`` per line).

    A document matches when the query term appears among its preprocessed
    tokens, so stemmed vocabulary terms find their surface forms. Results come
    in file-name then line order.
    """

    def __init__(self, directory: str | Path, prep: PrepConfig | None = None) -> None:
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise SourceError(f"{self.directory}: not a directory")
        self.name = f"local:{self.directory}"
        self.prep = prep or PrepConfig()
        self._docs: list[Document] = []
        self._tokens: list[frozenset[str]] = []
        for path in sorted(self.directory.glob("*.jsonl")):
            for line_no, line in enumerate(path.read_text(encoding="utf-8", errors="replace").splitlines(), 1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                doc = Document(str(obj.get("id", f"{path.stem}:{line_no}")), str(obj.get("text", "")))
                self._docs.append(doc)
                self._tokens.append(frozenset(preprocess(doc.text, self.prep)))

    def __len__(self) -> int:
        return len(self._docs)

    def fetch(self, query: str, limit: int) -> list[Document]:
        terms = preprocess(query, self.prep) or [query.lower()]
        hits = []
        for doc, toks in zip(self._docs, self._tokens):
            if all(t in toks for t in terms):
                hits.append(doc)
                if len(hits) >= limit:
                    break
        return hits


class HttpSource:
    """``GET {base_url}?q=<query>&limit=<n>`` returning a JSON array of ``{"id", "text"}``.

    The bearer token, if any, is read from the environment variable named by
    ``token_env`` at request time.
    """

    def __init__(self, base_url: str, token_env: str = "TWEETCAT_SOURCE_TOKEN", timeout: float = 10.0) -> None:
        self.base_url = base_url
        self.token_env = token_env
        self.timeout = timeout
        self.name = f"http:{base_url}"

    def _url(self, query: str, limit: int) -> str:
        sep = "&" if urllib.parse.urlparse(self.base_url).query else "?"
        return f"{self.base_url}{sep}{urllib.parse.urlencode({'q': query, 'limit': limit})}"

    def fetch(self, query: str, limit: int) -> list[Document]:
        req = urllib.request.Request(self._url(query, limit), headers={"Accept": "application/json"})
        token = os.environ.get(self.token_env)
        if token:
            req.add_header("Authorization", f"Bearer {token}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError) as exc:
            raise SourceError(f"{self.name}: query {query!r} failed: {exc}") from exc
        if not isinstance(payload, list):
            raise SourceError(f"{self.name}: expected a JSON array, got {type(payload).__name__}")
        docs = []
        for item in payload[:limit]:
            if not isinstance(item, dict) or "text" not in item:
                raise SourceError(f"{self.name}: malformed item {item!r}")
            docs.append(Document(str(item.get("id", "")), str(item["text"])))
        return docs


@dataclass(frozen=True)
class TermWeight:
    term: str
    weight: float


def _class_term_weights(model, k: int) -> np.ndarray:
    if isinstance(model, NbModel):
        # log P(t | k) - log P(t | not k), the rest pooled with the same smoothing
        rest = np.delete(model.feature_count, k, axis=0).sum(axis=0) + model.alpha
        log_rest = np.log(rest) - np.log(rest.sum())
        return model.feature_log_prob[k] - log_rest
    if isinstance(model, LinearModel):
        return model.weights[k]
    raise TypeError(f"top_terms needs a linear or naive Bayes model, got {type(model).__name__}")


def top_terms(model, vocabulary: Vocabulary, k: int, count: int) -> list[TermWeight]:
    """The ``count`` terms with the largest class-``k`` weight; ties in term order."""
    n_classes = model.n_classes
    if not 0 <= k < n_classes:
        raise ValueError(f"unknown class index {k}; model has {n_classes} classes")
    if len(vocabulary) != model.n_features:
        raise ValueError("vocabulary does not match the model's feature count")
    w = _class_term_weights(model, k)
    terms = vocabulary.terms
    order = sorted(range(len(terms)), key=lambda i: (-w[i], terms[i]))[: max(count, 0)]
    return [TermWeight(terms[i], float(w[i])) for i in order]


def normalized_hash(text: str) -> str:
    """Hash of the case-folded, whitespace-collapsed text."""
    norm = " ".join(text.casefold().split())
    return hashlib.sha256(norm.encode("utf-8")).hexdigest()


@dataclass
class BalanceReport:
    classes: list
    seed_counts: dict
    added_counts: dict
    round_sizes: list  # cumulative expansion size after each completed round
    rounds_run: int
    stopped_early: bool
    failed_queries: list = field(default_factory=list)
    queries: dict = field(default_factory=dict)  # round -> class -> list of queries
    review: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def total_counts(self) -> dict:
        return {c: self.seed_counts.get(c, 0) + self.added_counts.get(c, 0) for c in self.classes}

    def to_dict(self) -> dict:
        return {
            "classes": self.classes,
            "seed_counts": self.seed_counts,
            "added_counts": self.added_counts,
            "total_counts": self.total_counts,
            "round_sizes": self.round_sizes,
            "rounds_run": self.rounds_run,
            "stopped_early": self.stopped_early,
            "failed_queries": self.failed_queries,
            "queries": self.queries,
            "review": self.review,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lines = [f"{'class':<6} {'seed':>7} {'added':>7} {'total':>7}"]
        totals = self.total_counts
        for c in self.classes:
            lines.append(f"{c:<6} {self.seed_counts.get(c, 0):>7} {self.added_counts.get(c, 0):>7} {totals[c]:>7}")
        return "\n".join(lines)


def _fetch_with_retry(source, query, limit, retries, backoff, sleep) -> list[Document] | None:
    for attempt in range(retries):
        try:
            return list(source.fetch(query, limit))[:limit]
        except SourceError as exc:
            log.warning("attempt %d/%d: %s", attempt + 1, retries, exc)
            if attempt + 1 < retries:
                sleep(backoff * 2**attempt)
    return None


def expand_corpus(
    source: DocumentSource,
    pipeline,
    classes=None,
    per_class_terms: int = 5,
    per_query_limit: int = 50,
    rounds: int = 1,
    seed: int = 0,
    seed_data: LabeledDataset | None = None,
    refit: bool = True,
    review: bool = False,
    retries: int = 3,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[LabeledDataset, BalanceReport]:
    """Run the query-fetch-label loop and return only the newly gathered items.

    ``pipeline`` is a fitted :class:`tweetcat.models.Pipeline`. Each round
    visits the classes in an order drawn from ``default_rng([seed, round])``;
    a document found by two classes in one round goes to whichever asked
    first. With ``review`` the items are left untagged (``suggested_tag`` in
    their metadata) and no refitting happens. Refitting needs ``seed_data``.
    """
    from .models import fit_pipeline

    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    classes = list(classes) if classes is not None else list(pipeline.encoder.classes)
    index = pipeline.encoder.code_to_index
    unknown = [c for c in classes if c not in index]
    if unknown:
        raise ValueError(f"classes {unknown} are not known to the model")
    seen: set[str] = set()
    if seed_data is not None:
        seen.update(normalized_hash(t) for t in seed_data.texts)
    docs, tags, metas = [], [], []
    report = BalanceReport(
        classes=classes,
        seed_counts={c: (seed_data.class_counts().get(c, 0) if seed_data is not None else 0) for c in classes},
        added_counts={c: 0 for c in classes},
        round_sizes=[],
        rounds_run=0,
        stopped_early=False,
        review=review,
        meta={
            "source": source.name,
            "per_class_terms": per_class_terms,
            "per_query_limit": per_query_limit,
            "seed": seed,
            "refit": refit,
        },
    )
    current = pipeline
    for rnd in range(rounds):
        order = np.random.default_rng([seed, rnd]).permutation(len(classes))
        added = 0
        report.queries[rnd] = {}
        for ci in order:
            code = classes[ci]
            terms = top_terms(current.model, current.vectorizer.vocabulary, current.encoder.code_to_index[code], per_class_terms)
            report.queries[rnd][code] = [t.term for t in terms]
            for term in terms:
                fetched = _fetch_with_retry(source, term.term, per_query_limit, retries, backoff, sleep)
                if fetched is None:
                    log.warning("skipping query %r for %s after %d failures", term.term, code, retries)
                    report.failed_queries.append({"round": rnd, "class": code, "query": term.term})
                    continue
                for doc in fetched:
                    h = normalized_hash(doc.text)
                    if h in seen:
                        continue
                    seen.add(h)
                    meta = {"round": rnd, "query": term.term, "source": source.name}
                    if review:
                        meta["suggested_tag"] = code
                    docs.append(Document(doc.id or f"exp-{len(docs)}", doc.text))
                    tags.append("" if review else code)
                    metas.append(meta)
                    report.added_counts[code] += 1
                    added += 1
        report.rounds_run = rnd + 1
        report.round_sizes.append(len(docs))
        if added == 0:
            report.stopped_early = rnd + 1 < rounds
            break
        if refit and not review and seed_data is not None and rnd + 1 < rounds:
            grown = seed_data.concat(LabeledDataset(docs, tags, "expansion"), provenance="seed+expansion")
            vec = TextVectorizer.from_dict(current.vectorizer.to_dict())
            current = fit_pipeline(grown, current.kind, current.params, vec, current.prep)
    expansion = LabeledDataset(docs, tags, provenance=f"expansion:{source.name}", meta=metas or None)
    return expansion, report
