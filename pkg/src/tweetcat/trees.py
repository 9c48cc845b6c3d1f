"""CART trees, random forests and multinomial-deviance gradient boosting.

Split search works on the stored (non-zero) entries of a sparse matrix,
presorted once by (feature, value). Absent entries are zeros and are handled as
one extra group per feature, so a dense array and its sparse twin grow the same
tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .base import ScoreMatrix, as_csr, check_width, softmax

__all__ = [
    "Tree",
    "ForestModel",
    "GbModel",
    "gini_gain",
    "tree_fit",
    "tree_predict",
    "rf_fit",
    "rf_predict_proba",
    "gb_fit",
    "gb_raw_scores",
    "gb_predict_proba",
    "gb_staged_proba",
    "multinomial_deviance",
]

_GAIN_EPS = 1e-10
_LEAF = -1


class _Presorted:
    """Stored entries of X ordered by (column, value)."""

    def __init__(self, X: sp.csr_matrix) -> None:
        csc = X.tocsc()
        csc.sort_indices()
        cols = np.repeat(np.arange(csc.shape[1]), np.diff(csc.indptr))
        order = np.lexsort((csc.data, cols))
        self.rows = csc.indices[order].astype(np.int64)
        self.cols = cols[order]
        self.vals = csc.data[order]
        self.has_negative = bool(self.vals.size and self.vals.min() < 0)
        self.n_rows, self.n_cols = X.shape


@dataclass
class Tree:
    """Array-backed binary tree; node 0 is the root, ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # n_nodes x d
    n_features: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != _LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = as_csr(X)
        check_width(X, self.n_features)
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != _LEAF)
        keys = _entry_keys(X)
        while active.size:
            f = self.feature[node[active]]
            x = _gather(X, keys, active, f)
            go_left = x <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])
            active = active[self.feature[node[active]] != _LEAF]
        return node

    def to_nested(self, i: int = 0) -> dict:
        if self.feature[i] == _LEAF:
            return {"leaf": self.value[i].tolist()}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "left": self.to_nested(int(self.left[i])),
            "right": self.to_nested(int(self.right[i])),
        }

    @classmethod
    def from_nested(cls, root: dict, n_features: int) -> "Tree":
        feature, threshold, left, right, value = [], [], [], [], []
        width = None
        stack = [(root, None, False)]
        while stack:
            node, parent, is_right = stack.pop()
            i = len(feature)
            if parent is not None:
                (right if is_right else left)[parent] = i
            if "leaf" in node:
                leaf = list(node["leaf"])
                width = len(leaf)
                feature.append(_LEAF)
                threshold.append(0.0)
                value.append(leaf)
            else:
                feature.append(int(node["feature"]))
                threshold.append(float(node["threshold"]))
                value.append(None)
            left.append(_LEAF)
            right.append(_LEAF)
            if "leaf" not in node:
                stack.append((node["right"], i, True))
                stack.append((node["left"], i, False))
        vals = np.array([v if v is not None else [0.0] * width for v in value], dtype=np.float64)
        return cls(
            np.array(feature, dtype=np.int64),
            np.array(threshold),
            np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64),
            vals,
            n_features,
        )


def _entry_keys(X: sp.csr_matrix) -> np.ndarray:
    rows = np.repeat(np.arange(X.shape[0], dtype=np.int64), np.diff(X.indptr))
    return rows * X.shape[1] + X.indices.astype(np.int64)


def _gather(X: sp.csr_matrix, keys: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """X[rows[i], cols[i]] for sorted-index CSR X, zeros where nothing is stored."""
    q = rows.astype(np.int64) * X.shape[1] + cols
    pos = np.searchsorted(keys, q)
    pos_c = np.minimum(pos, max(keys.size - 1, 0))
    found = (pos < keys.size) & (keys[pos_c] == q) if keys.size else np.zeros(q.size, bool)
    out = np.zeros(q.size)
    out[found] = X.data[pos_c[found]]
    return out


def gini_gain(parent_counts, child_counts) -> float:
    """Gini impurity decrease of a partition, children weighted by size."""
    parent = np.asarray(parent_counts, dtype=float)
    n = parent.sum()

    def gini(c):
        c = np.asarray(c, dtype=float)
        t = c.sum()
        return 0.0 if t == 0 else 1.0 - float(np.sum((c / t) ** 2))

    weighted = sum(np.sum(c) / n * gini(c) for c in child_counts)
    return gini(parent) - weighted


def _best_split(pre, pos, row_w, row_s, tot_w, tot_s, min_leaf, feat_mask=None):
    """Best (feature, threshold, gain) over the entries ``pos`` of one node, or None."""
    if feat_mask is not None:
        pos = pos[feat_mask[pre.cols[pos]]]
    if pos.size == 0:
        return None
    c = pre.cols[pos]
    v = pre.vals[pos]
    r = pre.rows[pos]
    w = row_w[r]
    s = row_s[r]
    starts = np.flatnonzero(np.r_[True, c[1:] != c[:-1]])
    ucols = c[starts]
    col_w = np.add.reduceat(w, starts)
    col_s = np.add.reduceat(s, starts, axis=0)
    zero_w = tot_w - col_w
    zero_s = tot_s - col_s
    ins = starts.copy()
    if pre.has_negative:
        ins += np.add.reduceat((v < 0).astype(np.int64), starts)
    keep = zero_w > 1e-12
    if keep.any():
        at = ins[keep]
        c = np.insert(c, at, ucols[keep])
        v = np.insert(v, at, 0.0)
        w = np.insert(w, at, zero_w[keep])
        s = np.insert(s, at, zero_s[keep], axis=0)
    if c.size < 2:
        return None
    new_seg = np.r_[True, c[1:] != c[:-1]]
    seg_id = np.cumsum(new_seg) - 1
    seg_start = np.flatnonzero(new_seg)
    cw = np.cumsum(w)
    cs = np.cumsum(s, axis=0)
    left_w = cw - (cw - w)[seg_start][seg_id]
    left_s = cs - (cs - s)[seg_start][seg_id]
    cand = (c[:-1] == c[1:]) & (v[:-1] < v[1:])
    lw = left_w[:-1]
    rw = tot_w - lw
    cand &= (lw >= min_leaf - 1e-9) & (rw >= min_leaf - 1e-9)
    idx = np.flatnonzero(cand)
    if idx.size == 0:
        return None
    lw, rw = lw[idx], rw[idx]
    ls = left_s[idx]
    rs = tot_s - ls
    parent_term = float(np.sum(tot_s * tot_s)) / tot_w
    gain = (np.sum(ls * ls, axis=1) / lw + np.sum(rs * rs, axis=1) / rw - parent_term) / tot_w
    best = float(gain.max())
    if best < -_GAIN_EPS:
        return None
    # lowest feature index, then lowest threshold, among numerically equal gains
    j = int(np.flatnonzero(gain >= best - 1e-12 * max(1.0, abs(best)))[0])
    p = idx[j]
    return int(c[p]), 0.5 * (v[p] + v[p + 1]), best


def _grow(pre, row_w, row_s, row_s2, max_depth, min_leaf, max_features, rng):
    """Depth-first tree growth.

    ``row_s`` holds per-row weighted targets (n x d); ``row_s2`` the weighted
    squared targets summed over d, used only for the node impurity. Impure
    nodes split on their best partition even when it gains nothing (the XOR
    case); pure nodes become leaves.
    """
    feature, threshold, left, right, value = [], [], [], [], []
    rows0 = np.flatnonzero(row_w > 0)
    in_node = np.zeros(pre.n_rows, dtype=bool)
    in_node[rows0] = True
    pos0 = np.flatnonzero(in_node[pre.rows])
    go_left = np.zeros(pre.n_rows, dtype=bool)
    leaf_of_row = np.full(pre.n_rows, -1, dtype=np.int64)

    def new_node():
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        value.append(None)
        return len(feature) - 1

    root = new_node()
    stack = [(root, rows0, pos0, 0)]
    while stack:
        node, rows, pos, depth = stack.pop()
        tot_w = float(row_w[rows].sum())
        tot_s = row_s[rows].sum(axis=0)
        value[node] = tot_s / tot_w if tot_w > 0 else tot_s
        split = None
        impurity = float(row_s2[rows].sum()) / tot_w - float(np.sum(value[node] ** 2)) if tot_w > 0 else 0.0
        if (max_depth is None or depth < max_depth) and tot_w >= 2 * min_leaf and impurity > _GAIN_EPS:
            if max_features is None:
                split = _best_split(pre, pos, row_w, row_s, tot_w, tot_s, min_leaf)
            else:
                present = np.unique(pre.cols[pos])
                order = rng.permutation(present)
                mask = np.zeros(pre.n_cols, dtype=bool)
                for start in range(0, order.size, max_features):
                    mask[:] = False
                    mask[order[start : start + max_features]] = True
                    split = _best_split(pre, pos, row_w, row_s, tot_w, tot_s, min_leaf, mask)
                    if split is not None:
                        break
        if split is None:
            leaf_of_row[rows] = node
            continue
        f, thr, _ = split
        go_left[rows] = 0.0 <= thr
        col_pos = pos[pre.cols[pos] == f]
        go_left[pre.rows[col_pos]] = pre.vals[col_pos] <= thr
        lrows, rrows = rows[go_left[rows]], rows[~go_left[rows]]
        entry_left = go_left[pre.rows[pos]]
        lpos, rpos = pos[entry_left], pos[~entry_left]
        feature[node], threshold[node] = f, thr
        li = new_node()
        ri = new_node()
        left[node], right[node] = li, ri
        # push right first so the left subtree is numbered first
        stack.append((ri, rrows, rpos, depth + 1))
        stack.append((li, lrows, lpos, depth + 1))
    tree = Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.vstack(value),
        pre.n_cols,
    )
    return tree, leaf_of_row


def tree_fit(
    X,
    y,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    features_per_split: int | None = None,
    criterion: str = "gini",
    seed: int = 0,
    sample_weight=None,
    n_classes: int | None = None,
) -> Tree:
    """Greedy CART tree.

    ``criterion="gini"`` takes integer class labels and stores class
    distributions in the leaves; ``criterion="mse"`` takes real targets and
    stores leaf means.
    """
    X = as_csr(X)
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    w = np.ones(X.shape[0]) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    pre = _Presorted(X)
    return _fit_presorted(pre, y, w, max_depth, min_samples_leaf, features_per_split, criterion,
                          np.random.default_rng(seed), n_classes)[0]


def _fit_presorted(pre, y, w, max_depth, min_leaf, max_features, criterion, rng, n_classes=None):
    if criterion == "gini":
        y = np.asarray(y, dtype=np.int64)
        k = int(y.max()) + 1 if n_classes is None else n_classes
        row_s = np.zeros((y.size, k))
        row_s[np.arange(y.size), y] = w
        row_s2 = w  # sum_k w * onehot_k^2; impurity = 1 - sum p_k^2
    elif criterion == "mse":
        y = np.asarray(y, dtype=np.float64)
        row_s = (y * w)[:, None]
        row_s2 = y * y * w
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    return _grow(pre, w, row_s, row_s2, max_depth, min_leaf, max_features, rng)


def tree_predict(tree: Tree, X) -> np.ndarray:
    """Leaf values (class distributions or regression means), one row per sample."""
    return tree.value[tree.apply(X)]


# ---------------------------------------------------------------- random forest


@dataclass
class ForestModel:
    trees: list
    n_estimators: int = 500
    max_depth: int | None = 200
    random_state: int = 0
    features_per_split: int | None = None
    bootstrap: bool = True
    min_samples_leaf: int = 1
    n_classes: int = 0
    n_features: int = 0


def _fit_forest_tree(pre, y, k, i, params):
    rng = np.random.default_rng([params["random_state"], i])
    n = pre.n_rows
    if params["bootstrap"]:
        w = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
    else:
        w = np.ones(n)
    tree, _ = _fit_presorted(pre, y, w, params["max_depth"], params["min_samples_leaf"],
                             params["features_per_split"], "gini", rng, k)
    return tree


def rf_fit(
    X,
    y,
    n_estimators: int = 500,
    max_depth: int | None = 200,
    random_state: int = 0,
    features_per_split: int | str | None = "sqrt",
    bootstrap: bool = True,
    min_samples_leaf: int = 1,
    n_classes: int | None = None,
    n_jobs: int = 1,
) -> ForestModel:
    """Bagged Gini trees. Tree ``i`` uses ``default_rng([random_state, i])`` for
    its bootstrap sample and feature draws, so results do not depend on ``n_jobs``."""
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    X = as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    k = int(y.max()) + 1 if n_classes is None else n_classes
    v = X.shape[1]
    if features_per_split == "sqrt":
        features_per_split = max(1, math.ceil(math.sqrt(v)))
    pre = _Presorted(X)
    params = dict(random_state=random_state, bootstrap=bootstrap, max_depth=max_depth,
                  min_samples_leaf=min_samples_leaf, features_per_split=features_per_split)
    if n_jobs == 1:
        trees = [_fit_forest_tree(pre, y, k, i, params) for i in range(n_estimators)]
    else:
        from joblib import Parallel, delayed

        trees = Parallel(n_jobs=n_jobs)(delayed(_fit_forest_tree)(pre, y, k, i, params) for i in range(n_estimators))
    return ForestModel(trees, n_estimators, max_depth, random_state, features_per_split, bootstrap,
                       min_samples_leaf, k, v)


def rf_predict_proba(model: ForestModel, X) -> ScoreMatrix:
    X = as_csr(X)
    check_width(X, model.n_features)
    total = np.zeros((X.shape[0], model.n_classes))
    for tree in model.trees:
        total += tree_predict(tree, X)
    return ScoreMatrix(total / len(model.trees), True)


# ------------------------------------------------------------ gradient boosting


@dataclass
class GbModel:
    stages: list  # per round: list of K regression trees
    learning_rate: float
    n_estimators: int
    max_depth: int
    init_scores: np.ndarray
    subsample: float = 1.0
    seed: int = 0
    n_features: int = 0
    train_deviance: list = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.init_scores)


def multinomial_deviance(y: np.ndarray, raw: np.ndarray) -> float:
    """Mean negative log-likelihood of labels under softmax(raw)."""
    z = raw - raw.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return -float(logp[np.arange(y.size), y].mean())


def gb_fit(
    X,
    y,
    n_estimators: int = 100,
    learning_rate: float = 0.1,
    max_depth: int = 3,
    subsample: float = 1.0,
    seed: int = 0,
    min_samples_leaf: int = 1,
    n_classes: int | None = None,
) -> GbModel:
    """Stage-wise boosting of K regression trees per round on the multinomial deviance.

    Trees are fit to the residuals ``y_k - p_k`` by variance reduction; each
    leaf then takes one Newton step ``(K-1)/K * sum(r) / sum(|r|(1-|r|))``.
    """
    if n_estimators < 0 or learning_rate <= 0 or not 0 < subsample <= 1 or max_depth < 0:
        raise ValueError("invalid gradient boosting parameters")
    X = as_csr(X)
    y = np.asarray(y, dtype=np.int64)
    k = int(y.max()) + 1 if n_classes is None else n_classes
    if k < 2:
        raise ValueError("gradient boosting needs K >= 2")
    n = y.size
    counts = np.bincount(y, minlength=k).astype(np.float64)
    if np.any(counts == 0):
        raise ValueError(f"classes {np.flatnonzero(counts == 0).tolist()} have no training samples")
    init = np.log(counts / n)
    raw = np.tile(init, (n, 1))
    Y = np.zeros((n, k))
    Y[np.arange(n), y] = 1.0
    pre = _Presorted(X)
    stages = []
    trace = [multinomial_deviance(y, raw)]
    for m in range(n_estimators):
        rng = np.random.default_rng([seed, m])
        if subsample < 1.0:
            w = np.zeros(n)
            w[rng.choice(n, size=max(1, int(round(subsample * n))), replace=False)] = 1.0
        else:
            w = np.ones(n)
        resid = Y - softmax(raw)
        round_trees = []
        for cls in range(k):
            r = resid[:, cls]
            tree, leaf_of_row = _fit_presorted(pre, r, w, max_depth, min_samples_leaf, None, "mse", rng)
            in_bag = w > 0
            leaves = leaf_of_row[in_bag]
            rb = r[in_bag]
            num = np.bincount(leaves, weights=rb, minlength=tree.n_nodes)
            den = np.bincount(leaves, weights=np.abs(rb) * (1.0 - np.abs(rb)), minlength=tree.n_nodes)
            step = np.zeros(tree.n_nodes)
            ok = np.abs(den) >= 1e-150
            step[ok] = (k - 1) / k * num[ok] / den[ok]
            tree.value = step[:, None]
            raw[:, cls] += learning_rate * step[tree.apply(X)]
            round_trees.append(tree)
        stages.append(round_trees)
        trace.append(multinomial_deviance(y, raw))
    return GbModel(stages, learning_rate, n_estimators, max_depth, init, subsample, seed, X.shape[1], trace)


def gb_raw_scores(model: GbModel, X, n_stages: int | None = None) -> np.ndarray:
    X = as_csr(X)
    check_width(X, model.n_features)
    raw = np.tile(model.init_scores, (X.shape[0], 1))
    for round_trees in model.stages[:n_stages]:
        for cls, tree in enumerate(round_trees):
            raw[:, cls] += model.learning_rate * tree_predict(tree, X)[:, 0]
    return raw


def gb_predict_proba(model: GbModel, X) -> ScoreMatrix:
    return ScoreMatrix(softmax(gb_raw_scores(model, X)), True)


def gb_staged_proba(model: GbModel, X, n_stages: int) -> ScoreMatrix:
    """Probabilities using only the first ``n_stages`` boosting rounds."""
    return ScoreMatrix(softmax(gb_raw_scores(model, X, n_stages)), True)
