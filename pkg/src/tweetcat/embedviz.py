"""Exact t-SNE for document matrices and a dependency-free SVG scatter plot."""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np
import scipy.sparse as sp

__all__ = [
    "TsneConfig",
    "Embedding2D",
    "pairwise_sq_distances",
    "conditional_affinities",
    "joint_affinities",
    "kl_divergence",
    "tsne",
    "random_projection",
    "stratified_subsample",
    "silhouette",
    "render_scatter_svg",
    "save_embedding_csv",
    "PALETTE",
]

log = logging.getLogger(__name__)

# 12 visually distinct colours, one per category
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#ad494a",
)  # fmt: skip


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    learning_rate: float = 200.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum: float = 0.5
    final_momentum: float = 0.8
    min_gain: float = 0.01
    init_std: float = 1e-4
    seed: int = 0
    max_points: int = 2000
    pre_reduce: int | None = None  # random-projection width, None disables
    entropy_tol: float = 1e-5
    max_bisections: int = 50

    def __post_init__(self) -> None:
        if self.iterations < self.exaggeration_iters:
            raise ValueError(f"iterations must be >= {self.exaggeration_iters}")
        if self.perplexity <= 0 or self.learning_rate <= 0:
            raise ValueError("perplexity and learning_rate must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Embedding2D:
    coords: np.ndarray  # n x 2
    labels: list
    rows: np.ndarray  # indices of the input rows that were embedded
    kl_trace: list = field(default_factory=list)  # kl_trace[t] = KL after t iterations
    config: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.coords.shape[0]


def _dense(X) -> np.ndarray:
    if hasattr(X, "matrix") and hasattr(X, "mode"):
        X = X.matrix
    return X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)


def pairwise_sq_distances(X: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def conditional_affinities(D: np.ndarray, perplexity: float, tol: float = 1e-5, max_steps: int = 50):
    """Rows of p(j | i) whose Shannon entropy (nats) matches ``log(perplexity)``.

    Bisection on the precision beta = 1 / (2 sigma^2) for each point. Returns
    (P, beta, entropy).
    """
    n = D.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    betas = np.ones(n)
    entropies = np.zeros(n)
    for i in range(n):
        d = np.delete(D[i], i)
        d = d - d.min()  # shift for stability; cancels in the normalization
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(max_steps):
            w = np.exp(-beta * d)
            s = w.sum()
            p = w / s
            h = np.log(s) + beta * float(d @ p)
            diff = h - target
            if abs(diff) < tol:
                break
            if diff > 0:  # too flat: sharpen
                lo = beta
                beta = beta * 2 if hi == np.inf else (beta + hi) / 2
            else:
                hi = beta
                beta = (beta + lo) / 2
        P[i, np.arange(n) != i] = p
        betas[i] = beta
        entropies[i] = h
    return P, betas, entropies


def joint_affinities(P_cond: np.ndarray) -> np.ndarray:
    n = P_cond.shape[0]
    P = (P_cond + P_cond.T) / (2.0 * n)
    return np.maximum(P, 1e-12)


def kl_divergence(P: np.ndarray, Y: np.ndarray) -> float:
    num = 1.0 / (1.0 + pairwise_sq_distances(Y))
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), 1e-12)
    mask = ~np.eye(P.shape[0], dtype=bool)
    return float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))


def random_projection(X, dim: int = 50, seed: int = 0) -> np.ndarray:
    """Gaussian random projection to ``dim`` columns (scaled by 1/sqrt(dim))."""
    rng = np.random.default_rng(seed)
    n_features = X.shape[1]
    R = rng.normal(size=(n_features, dim)) / np.sqrt(dim)
    if hasattr(X, "matrix") and hasattr(X, "mode"):
        X = X.matrix
    return np.asarray(X @ R)


def stratified_subsample(labels, max_points: int, seed: int = 0) -> np.ndarray:
    """Sorted row indices; each class keeps a share proportional to its size."""
    labels = np.asarray(labels)
    n = labels.size
    if n <= max_points:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(labels, return_counts=True)
    exact = counts * max_points / n
    quota = np.floor(exact).astype(int)
    for j in np.argsort(-(exact - quota), kind="stable")[: max_points - quota.sum()]:
        quota[j] += 1
    picked = [rng.choice(np.flatnonzero(labels == c), size=q, replace=False) for c, q in zip(classes, quota)]
    return np.sort(np.concatenate(picked))


def tsne(X, labels=None, cfg: TsneConfig | None = None) -> Embedding2D:
    """Exact O(n^2) t-SNE with early exaggeration, momentum and adaptive gains."""
    cfg = cfg or TsneConfig()
    n_all = X.shape[0]
    labels = list(labels) if labels is not None else [""] * n_all
    if len(labels) != n_all:
        raise ValueError("labels and rows differ in length")
    rows = stratified_subsample(labels, cfg.max_points, cfg.seed)
    if cfg.pre_reduce:
        data = random_projection(X, cfg.pre_reduce, cfg.seed)[rows]
    else:
        data = _dense(X)[rows] if len(rows) < n_all else _dense(X)
    labels = [labels[i] for i in rows]
    n = data.shape[0]
    if n < 5:
        raise ValueError(f"t-SNE needs at least 5 points, got {n}")
    if cfg.perplexity >= (n - 1) / 3:
        raise ValueError(f"perplexity {cfg.perplexity} too large for {n} points (must be < {(n - 1) / 3:.3g})")

    rng = np.random.default_rng(cfg.seed)
    Y = rng.normal(0.0, cfg.init_std, size=(n, 2))
    D = pairwise_sq_distances(data)
    if not D.any():
        log.warning("all %d rows are identical; returning the initial point cloud", n)
        return Embedding2D(Y - Y.mean(axis=0), labels, rows, [], cfg.to_dict())

    P_cond, _, _ = conditional_affinities(D, cfg.perplexity, cfg.entropy_tol, cfg.max_bisections)
    P = joint_affinities(P_cond)
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace = [kl_divergence(P, Y)]
    for it in range(cfg.iterations):
        exaggerate = it < cfg.exaggeration_iters
        momentum = cfg.momentum if exaggerate else cfg.final_momentum
        PP = P * cfg.early_exaggeration if exaggerate else P
        num = 1.0 / (1.0 + pairwise_sq_distances(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)
        W = (PP - Q) * num
        grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, cfg.min_gain, out=gains)
        update = momentum * update - cfg.learning_rate * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
        trace.append(kl_divergence(P, Y))
    return Embedding2D(Y, labels, rows, trace, cfg.to_dict())


def silhouette(X: np.ndarray, labels) -> float:
    """Mean silhouette coefficient with Euclidean distances; singletons score 0."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("silhouette needs at least two clusters")
    D = np.sqrt(pairwise_sq_distances(X))
    s = np.zeros(labels.size)
    for i in range(labels.size):
        own = labels == labels[i]
        if own.sum() == 1:
            continue
        a = D[i, own].sum() / (own.sum() - 1)
        b = min(D[i, labels == c].mean() for c in classes if c != labels[i])
        s[i] = (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return float(s.mean())


def render_scatter_svg(
    emb: Embedding2D,
    path: str | Path | None = None,
    class_filter=None,
    class_order=None,
    title: str = "",
    size: int = 600,
    radius: float = 3.0,
) -> str:
    """One circle per point, coloured by class, with a legend.

    ``class_filter`` keeps only the listed classes (e.g. a pair for a
    one-against-one view). Colours follow ``class_order`` (default: sorted
    labels) so that the same class keeps its colour across views.
    """
    coords = np.asarray(emb.coords)
    labels = list(emb.labels)
    if not labels:
        raise ValueError("empty embedding")
    order = list(class_order) if class_order is not None else sorted(set(labels))
    colour = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(order)}
    keep = [i for i, lab in enumerate(labels) if class_filter is None or lab in set(class_filter)]
    shown = [c for c in order if any(labels[i] == c for i in keep)]
    pts = coords[keep] if keep else np.zeros((0, 2))

    legend_w = 150
    margin = 20
    top = 30 if title else margin
    if len(pts):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    span = np.where(hi > lo, hi - lo, 1.0)
    scale = (size - 2 * margin) / span.max()

    def xy(p):
        x = margin + (p[0] - lo[0]) * scale
        y = top + (hi[1] - p[1]) * scale  # y grows downward in SVG
        return x, y

    width = size + legend_w
    height = max(top + span[1] * scale + margin, top + 20 * len(shown) + margin)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.1f} {height:.1f}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width:.1f}" height="{height:.1f}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{size / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append('<g class="points">')
    for i in keep:
        x, y = xy(coords[i])
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius}" fill="{colour[labels[i]]}" fill-opacity="0.8"/>')
    out.append("</g>")
    out.append('<g class="legend">')
    for j, c in enumerate(shown):
        ly = top + 20 * j
        out.append(f'<rect x="{size + 10}" y="{ly}" width="12" height="12" fill="{colour[c]}"/>')
        out.append(f'<text x="{size + 28}" y="{ly + 10}">{escape(str(c))}</text>')
    out.append("</g>")
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(svg, encoding="utf-8")
    return svg


def save_embedding_csv(emb: Embedding2D, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "label"])
        for (x, y), lab in zip(emb.coords, emb.labels):
            w.writerow([repr(float(x)), repr(float(y)), lab])
