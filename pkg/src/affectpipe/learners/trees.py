"""Regression trees and tree ensembles, numpy only.

Split search runs on pre-binned features (quantile bins, thresholds kept
as raw values), with per-node histograms accumulated in a single bincount
across all features. Extra-trees draws one uniform threshold per feature
per node instead. All randomness flows from a caller-supplied generator,
so fits are bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np

MAX_BINS = 64


def bin_features(X: np.ndarray, n_bins: int = MAX_BINS):
    """Per-column candidate thresholds and integer codes.

    Thresholds are midpoints between adjacent occupied values (or
    quantile representatives when a column holds many distinct values).
    ``codes[i, j] == c`` means column j of row i satisfies
    ``x <= thresholds[j][c]`` and ``x > thresholds[j][c - 1]``.
    """
    n, f = X.shape
    thresholds = []
    codes = np.zeros((n, f), dtype=np.int32)
    for j in range(f):
        col = X[:, j]
        uniq = np.unique(col)
        if uniq.size > n_bins:
            qs = np.quantile(col, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
            uniq = np.unique(qs)
        cuts = (uniq[:-1] + uniq[1:]) / 2.0 if uniq.size > 1 \
            else np.empty(0)
        thresholds.append(cuts)
        codes[:, j] = np.searchsorted(cuts, col, side="left")
    return thresholds, codes


@dataclass
class Tree:
    feature: np.ndarray    # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = self.feature[node] >= 0
        while np.any(active):
            rows = np.flatnonzero(active)
            cur = node[rows]
            feat = self.feature[cur]
            go_left = X[rows, feat] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]


class _TreeBuilder:
    def __init__(self, max_depth, min_leaf):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature, self.threshold = [], []
        self.left, self.right, self.value = [], [], []

    def new_node(self, mean):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(mean)
        return len(self.feature) - 1

    def finish(self) -> Tree:
        return Tree(np.asarray(self.feature, dtype=np.intp),
                    np.asarray(self.threshold),
                    np.asarray(self.left, dtype=np.intp),
                    np.asarray(self.right, dtype=np.intp),
                    np.asarray(self.value))


def _histogram_split(codes, y, idx, thresholds, min_leaf, width):
    """Best (feature, threshold-index, gain) on one node via histograms."""
    sub = codes[idx]
    n, f = sub.shape
    offsets = np.arange(f, dtype=np.int64) * width
    flat = (sub.astype(np.int64) + offsets[None, :]).ravel()
    counts = np.bincount(flat, minlength=f * width).reshape(f, width)
    sums = np.bincount(flat, weights=np.repeat(y[idx], f),
                       minlength=f * width).reshape(f, width)
    cnt_l = np.cumsum(counts, axis=1)[:, :-1]
    sum_l = np.cumsum(sums, axis=1)[:, :-1]
    total = float(y[idx].sum())
    cnt_r = n - cnt_l
    sum_r = total - sum_l
    valid = (cnt_l >= min_leaf) & (cnt_r >= min_leaf)
    for j in range(f):  # cuts beyond this feature's threshold list
        valid[j, len(thresholds[j]):] = False
    if not np.any(valid):
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(valid,
                        sum_l ** 2 / np.maximum(cnt_l, 1)
                        + sum_r ** 2 / np.maximum(cnt_r, 1),
                        -np.inf)
    j, c = np.unravel_index(int(np.argmax(gain)), gain.shape)
    base = total ** 2 / n
    if gain[j, c] <= base + 1e-12:
        return None
    return int(j), int(c), float(gain[j, c] - base)


def build_tree_binned(codes, thresholds, y, idx, max_depth, min_leaf):
    width = max((t.size for t in thresholds), default=0) + 1
    builder = _TreeBuilder(max_depth, min_leaf)
    root = builder.new_node(float(y[idx].mean()))
    stack = [(root, idx, 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= max_depth or rows.size < 2 * min_leaf:
            continue
        found = _histogram_split(codes, y, rows, thresholds, min_leaf,
                                 width)
        if found is None:
            continue
        j, c, _gain = found
        go_left = codes[rows, j] <= c
        left_rows, right_rows = rows[go_left], rows[~go_left]
        builder.feature[node] = j
        builder.threshold[node] = float(thresholds[j][c])
        left = builder.new_node(float(y[left_rows].mean()))
        right = builder.new_node(float(y[right_rows].mean()))
        builder.left[node], builder.right[node] = left, right
        stack.append((left, left_rows, depth + 1))
        stack.append((right, right_rows, depth + 1))
    return builder.finish()


def build_tree_random_splits(X, y, idx, max_depth, min_leaf, rng):
    """Extra-trees style: one uniform random cut per feature per node."""
    builder = _TreeBuilder(max_depth, min_leaf)
    root = builder.new_node(float(y[idx].mean()))
    stack = [(root, idx, 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= max_depth or rows.size < 2 * min_leaf:
            continue
        sub = X[rows]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        spread = hi > lo
        cuts = lo + rng.uniform(size=lo.size) * (hi - lo)
        go_left = sub <= cuts[None, :]
        n_l = go_left.sum(axis=0)
        n_r = rows.size - n_l
        s_l = y[rows] @ go_left
        total = float(y[rows].sum())
        valid = spread & (n_l >= min_leaf) & (n_r >= min_leaf)
        if not np.any(valid):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = np.where(valid,
                            s_l ** 2 / np.maximum(n_l, 1)
                            + (total - s_l) ** 2 / np.maximum(n_r, 1),
                            -np.inf)
        j = int(np.argmax(gain))
        if gain[j] <= total ** 2 / rows.size + 1e-12:
            continue
        mask = go_left[:, j]
        left_rows, right_rows = rows[mask], rows[~mask]
        builder.feature[node] = j
        builder.threshold[node] = float(cuts[j])
        left = builder.new_node(float(y[left_rows].mean()))
        right = builder.new_node(float(y[right_rows].mean()))
        builder.left[node], builder.right[node] = left, right
        stack.append((left, left_rows, depth + 1))
        stack.append((right, right_rows, depth + 1))
    return builder.finish()


class ForestRegressor:
    """Bagged trees; ``splitter`` picks exact-histogram or random cuts."""

    def __init__(self, n_trees=100, max_depth=12, min_leaf=5,
                 splitter="histogram", n_bins=MAX_BINS):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.splitter = splitter
        self.n_bins = n_bins
        self.trees = []

    def fit(self, X, y, rng: np.random.Generator):
        n = X.shape[0]
        idx_all = np.arange(n)
        if self.splitter == "histogram":
            thresholds, codes = bin_features(X, self.n_bins)
        self.trees = []
        for child in rng.spawn(self.n_trees):
            tree_rng = np.random.default_rng(child)
            sample = np.sort(tree_rng.integers(0, n, size=n))
            if self.splitter == "histogram":
                tree = build_tree_binned(codes, thresholds, y,
                                         idx_all[sample], self.max_depth,
                                         self.min_leaf)
            else:
                tree = build_tree_random_splits(X, y, idx_all[sample],
                                                self.max_depth,
                                                self.min_leaf, tree_rng)
            self.trees.append(tree)
        return self

    def predict(self, X):
        out = np.zeros(X.shape[0])
        for tree in self.trees:
            out += tree.predict(X)
        return out / max(len(self.trees), 1)


class GradientBoostedTrees:
    """Squared-loss boosting with shallow histogram trees."""

    def __init__(self, n_rounds=200, max_depth=3, min_leaf=5,
                 learning_rate=0.1, n_bins=MAX_BINS):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.learning_rate = learning_rate
        self.n_bins = n_bins
        self.base = 0.0
        self.trees = []

    def fit(self, X, y, rng: np.random.Generator):
        del rng  # deterministic given the data; kept for interface parity
        n = X.shape[0]
        thresholds, codes = bin_features(X, self.n_bins)
        idx = np.arange(n)
        self.base = float(y.mean())
        current = np.full(n, self.base)
        self.trees = []
        for _ in range(self.n_rounds):
            residual = y - current
            tree = build_tree_binned(codes, thresholds, residual, idx,
                                     self.max_depth, self.min_leaf)
            step = tree.predict(X)
            if np.allclose(step, 0.0):
                break
            current += self.learning_rate * step
            self.trees.append(tree)
        return self

    def predict(self, X):
        out = np.full(X.shape[0], self.base)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out
