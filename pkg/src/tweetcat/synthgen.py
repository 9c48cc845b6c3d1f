"""Seeded synthetic tweet corpora standing in for the unpublished datasets.

Every class owns a disjoint pool of 30 pseudo-words. A document mixes class
words with words from a shared pool (rate ``rho``) and optionally corrupts
tokens the way informal tweets do (dropped vowels, truncation). Two presets
bracket the difficulty range: ``synonym-like`` (clean, keyword-driven) and
``topuser-like`` (heavy sharing and slang).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .corpus import CATEGORIES, Document, LabeledDataset
from .porter import stem
from .textprep import default_stopwords

__all__ = [
    "GenSpec",
    "PRESETS",
    "preset",
    "generate",
    "generate_combined",
    "keyword_pools",
    "xor_clusters",
    "two_gaussians",
]

POOL_SIZE = 30
SHARED_POOL_SIZE = 300
_POOL_SEED = 20200612
_ONSETS = list("bdfgklmnprstvz") + ["br", "dr", "gr", "kr", "pl", "st", "tr", "sk", "sn", "ch", "sh", "th"]
_NUCLEI = ["a", "e", "i", "o", "u", "ai", "ou", "ee", "oo"]
_CODAS = ["", "", "", "n", "r", "k", "m", "x", "d", "p", "t", "b"]


@dataclass(frozen=True)
class GenSpec:
    classes: tuple[str, ...] = CATEGORIES
    docs_per_class: int = 1000
    mean_length: float = 12.0
    min_length: int = 3
    rho: float = 0.1
    slang_rate: float = 0.0
    seed: int = 0
    name: str = "custom"

    def __post_init__(self) -> None:
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        if not 0 <= self.slang_rate <= 1:
            raise ValueError("slang_rate must lie in [0, 1]")
        if self.docs_per_class < 0 or self.min_length < 1 or self.mean_length <= 0:
            raise ValueError("invalid document counts or lengths")
        if len(set(self.classes)) != len(self.classes) or not self.classes:
            raise ValueError("classes must be distinct and non-empty")
        if len(self.classes) > len(CATEGORIES):
            raise ValueError(f"at most {len(CATEGORIES)} classes have keyword pools")


PRESETS = {
    "synonym-like": GenSpec(rho=0.1, slang_rate=0.0, seed=1, name="synonym-like"),
    "topuser-like": GenSpec(rho=0.45, slang_rate=0.3, seed=2, name="topuser-like"),
}


def preset(name: str, **overrides) -> GenSpec:
    try:
        spec = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)} or 'combined'") from None
    return replace(spec, **overrides)


@lru_cache(maxsize=None)
def keyword_pools() -> tuple[dict[str, tuple[str, ...]], tuple[str, ...]]:
    """Fixed per-class pools plus the shared pool.

    Words are accepted only if the Porter stemmer leaves them unchanged and
    they are not stopwords, so pool membership survives preprocessing.
    """
    rng = np.random.default_rng(_POOL_SEED)
    stops = default_stopwords()
    need = POOL_SIZE * len(CATEGORIES) + SHARED_POOL_SIZE
    seen: set[str] = set()
    words: list[str] = []
    while len(words) < need:
        n_syll = int(rng.integers(2, 4))
        w = "".join(
            _ONSETS[rng.integers(len(_ONSETS))] + _NUCLEI[rng.integers(len(_NUCLEI))] for _ in range(n_syll)
        ) + _CODAS[rng.integers(len(_CODAS))]
        if w in seen or w in stops or not 5 <= len(w) <= 10 or stem(w) != w:
            continue
        seen.add(w)
        words.append(w)
    pools = {c: tuple(words[i * POOL_SIZE : (i + 1) * POOL_SIZE]) for i, c in enumerate(CATEGORIES)}
    shared = tuple(words[POOL_SIZE * len(CATEGORIES) :])
    return pools, shared


def _corrupt(word: str, rng: np.random.Generator) -> str:
    if rng.random() < 0.5:
        dropped = "".join(ch for ch in word if ch not in "aeiou")
        return dropped if len(dropped) >= 2 else word
    cut = int(rng.integers(3, max(4, len(word))))
    return word[:cut]


def _generate_class(spec: GenSpec, class_index: int, pools, shared) -> list[tuple[Document, str]]:
    code = spec.classes[class_index]
    pool = pools[code] if code in pools else pools[CATEGORIES[class_index]]
    rng = np.random.default_rng([spec.seed, class_index])
    out = []
    for i in range(spec.docs_per_class):
        length = max(spec.min_length, int(rng.poisson(spec.mean_length)))
        from_shared = rng.random(length) < spec.rho
        tokens = []
        for use_shared in from_shared:
            source = shared if use_shared else pool
            w = source[rng.integers(len(source))]
            if spec.slang_rate and rng.random() < spec.slang_rate:
                w = _corrupt(w, rng)
            tokens.append(w)
        out.append((Document(f"{spec.name}-{code}-{i:05d}", " ".join(tokens)), code))
    return out


def generate(spec: GenSpec) -> LabeledDataset:
    """Class-blocked dataset with exactly ``docs_per_class`` documents per class."""
    pools, shared = keyword_pools()
    docs, tags = [], []
    for k in range(len(spec.classes)):
        for doc, tag in _generate_class(spec, k, pools, shared):
            docs.append(doc)
            tags.append(tag)
    return LabeledDataset(docs, tags, provenance=f"synthgen:{spec.name}:seed={spec.seed}")


def generate_combined(docs_per_class: int = 1000) -> LabeledDataset:
    """Union of both presets, the analogue of the merged corpus."""
    a = generate(preset("synonym-like", docs_per_class=docs_per_class))
    b = generate(preset("topuser-like", docs_per_class=docs_per_class))
    return a.concat(b, provenance="synthgen:combined")


def xor_clusters(n: int = 2000, seed: int = 0, noise: float = 0.35) -> tuple[np.ndarray, np.ndarray]:
    """Four Gaussian blobs at (+-1, +-1); label is the XOR of the coordinate signs."""
    rng = np.random.default_rng(seed)
    corner = rng.integers(0, 2, size=(n, 2))
    X = (2 * corner - 1) + rng.normal(0.0, noise, size=(n, 2))
    y = corner[:, 0] ^ corner[:, 1]
    return X, y.astype(np.int64)


def two_gaussians(n: int = 200, seed: int = 0, dim: int = 2, separation: float = 10.0):
    """Two isotropic unit-variance clusters whose centres are ``separation`` apart."""
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], [n // 2, n - n // 2])
    centre = np.zeros((2, dim))
    centre[1, 0] = separation
    X = centre[y] + rng.normal(size=(n, dim))
    return X, y
