"""Tweet text normalisation: case folding, URL/mention stripping, tokenizing,
stopword removal, optional dictionary lemmatization and Porter stemming."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .porter import stem

__all__ = [
    "PrepConfig",
    "default_stopwords",
    "load_stopwords",
    "load_lemmas",
    "preprocess",
    "preprocess_many",
    "stem",
]

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_SPLIT_RE = re.compile(r"[\W_]+")


def _read_data(name: str) -> str:
    return resources.files("tweetcat").joinpath("data").joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    return frozenset(w.strip().lower() for w in _read_data("stopwords_en.txt").splitlines() if w.strip())


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file, one word per line; blank lines and ``#`` comments skipped."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8", errors="replace").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


@lru_cache(maxsize=None)
def load_lemmas() -> dict[str, str]:
    table = {}
    for line in _read_data("lemmas_en.tsv").splitlines():
        if line.strip():
            word, lemma = line.split("\t")
            table[word] = lemma
    return table


@dataclass(frozen=True)
class PrepConfig:
    lowercase: bool = True
    strip_urls_mentions: bool = True
    stopword_list: frozenset[str] = field(default_factory=default_stopwords)
    stemming: bool = True
    lemmatize: bool = False
    min_token_len: int = 2

    def __post_init__(self) -> None:
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        lowered = frozenset(w.lower() for w in self.stopword_list)
        object.__setattr__(self, "stopword_list", lowered)

    def to_dict(self) -> dict:
        d = {
            "lowercase": self.lowercase,
            "strip_urls_mentions": self.strip_urls_mentions,
            "stemming": self.stemming,
            "lemmatize": self.lemmatize,
            "min_token_len": self.min_token_len,
        }
        if self.stopword_list != default_stopwords():
            d["stopword_list"] = sorted(self.stopword_list)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PrepConfig":
        d = dict(d)
        if "stopword_list" in d:
            d["stopword_list"] = frozenset(d["stopword_list"])
        return cls(**d)


def preprocess(text: str | bytes, cfg: PrepConfig | None = None) -> list[str]:
    """Turn one raw tweet into a list of normalized terms.

    Order: case folding, URL and @mention removal (``#`` dropped, hashtag word
    kept), split on non-alphanumerics, stopword and short-token filtering,
    optional lemma lookup, then stemming. Stopwords are checked on the surface
    form, before stemming.
    """
    cfg = cfg or PrepConfig()
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    if cfg.lowercase:
        text = text.lower()
    if cfg.strip_urls_mentions:
        text = _URL_RE.sub(" ", text)
        text = _MENTION_RE.sub(" ", text)
    text = text.replace("#", " ")

    lemmas = load_lemmas() if cfg.lemmatize else None
    stops = cfg.stopword_list
    out = []
    for tok in _SPLIT_RE.split(text):
        if len(tok) < cfg.min_token_len or tok in stops:
            continue
        if lemmas is not None:
            tok = lemmas.get(tok, tok)
        if cfg.stemming:
            tok = stem(tok)
        # stemming can shorten a token or land on a stopword ("us" from "use"s)
        if len(tok) < cfg.min_token_len or tok in stops:
            continue
        out.append(tok)
    return out


def preprocess_many(texts, cfg: PrepConfig | None = None) -> list[list[str]]:
    cfg = cfg or PrepConfig()
    return [preprocess(t, cfg) for t in texts]
