"""CART decision trees (Gini impurity) and a bagged random forest.

Trees are stored as flat node arrays so that a forest can be evaluated for
many rows and all trees at once with a handful of vectorised steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _rng
from ..errors import DimensionMismatch, SingleClass
from .config import TrainConfig

LEAF = -1


@dataclass(frozen=True)
class DecisionTree:
    feature: np.ndarray  # int, LEAF for leaves
    threshold: np.ndarray  # go left when x[feature] <= threshold
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (nodes, classes) training class counts

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def depth(self):
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X):
        """Leaf index reached by each row."""
        node = np.zeros(len(X), dtype=np.intp)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f != LEAF
            if not inner.any():
                return node
            go_left = X[rows[inner], f[inner]] <= self.threshold[node[inner]]
            node[inner] = np.where(go_left, self.left[node[inner]], self.right[node[inner]])

    def predict(self, X):
        """Majority class of the reached leaf; ties go to the lowest class."""
        return np.argmax(self.counts[self.apply(np.asarray(X, dtype=float))], axis=1)


def _gini_from_counts(counts, totals):
    p = counts / totals[:, None]
    return 1.0 - np.sum(p * p, axis=1)


def _best_split(Xn, yn, n_classes, features, min_leaf):
    """Best (impurity, feature, threshold) over ``features`` for one node."""
    n = len(yn)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), yn] = 1.0
    total = onehot.sum(axis=0)
    sizes_left = np.arange(1, n, dtype=float)
    sizes_right = n - sizes_left
    best = (math.inf, None, None)
    for f in features:
        x = Xn[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = total - left
        ok = xs[:-1] < xs[1:]
        if min_leaf > 1:
            ok &= (sizes_left >= min_leaf) & (sizes_right >= min_leaf)
        if not ok.any():
            continue
        impurity = (sizes_left * _gini_from_counts(left, sizes_left)
                    + sizes_right * _gini_from_counts(right, sizes_right)) / n
        impurity = np.where(ok, impurity, math.inf)
        i = int(np.argmin(impurity))
        if impurity[i] < best[0]:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if not thr < xs[i + 1]:
                thr = xs[i]
            best = (float(impurity[i]), int(f), float(thr))
    return best


def fit_tree(X, y, n_classes, max_depth, min_samples_leaf, max_features, rng):
    """Grow one CART tree on integer labels ``y`` in ``0..n_classes-1``."""
    n_features = X.shape[1]
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        c = counts[node]
        if depth >= max_depth or len(idx) < 2 * min_samples_leaf or np.count_nonzero(c) <= 1:
            continue
        # sample max_features candidates; fall through to the rest only if all are constant
        perm = rng.permutation(n_features)
        Xn, yn = X[idx], y[idx]
        imp, f, thr = _best_split(Xn, yn, n_classes, perm[:max_features], min_samples_leaf)
        if f is None:
            for g in perm[max_features:]:
                imp, f, thr = _best_split(Xn, yn, n_classes, [g], min_samples_leaf)
                if f is not None:
                    break
        if f is None:
            continue
        go_left = Xn[:, f] <= thr
        li, ri = new_node(idx[go_left]), new_node(idx[~go_left])
        feature[node], threshold[node], left[node], right[node] = f, thr, li, ri
        stack.append((ri, idx[~go_left], depth + 1))
        stack.append((li, idx[go_left], depth + 1))
    return DecisionTree(
        np.array(feature, dtype=np.intp),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(counts, dtype=np.int64),
    )


@dataclass
class RandomForestModel:
    trees: list
    classes: np.ndarray  # original label of each internal class index
    n_features: int
    features_per_split: int
    seed: int

    kind = "rf"

    def __post_init__(self):
        self._pack()

    @property
    def trees_count(self):
        return len(self.trees)

    def _pack(self):
        # all trees in one flat node table; child pointers are global offsets
        sizes = [t.n_nodes for t in self.trees]
        self._roots = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp)
        self._feat = np.concatenate([t.feature for t in self.trees]).astype(np.intp)
        self._thr = np.concatenate([t.threshold for t in self.trees]).astype(float)
        self._left = np.concatenate([t.left + r for t, r in zip(self.trees, self._roots)]).astype(np.intp)
        self._right = np.concatenate([t.right + r for t, r in zip(self.trees, self._roots)]).astype(np.intp)
        self._vote = np.concatenate([np.argmax(t.counts, axis=1) for t in self.trees]).astype(np.intp)

    def tree_votes(self, X):
        """(rows, trees) internal class index voted by each tree."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape}")
        R, T = len(X), len(self.trees)
        node = np.tile(self._roots, R)
        base = np.repeat(np.arange(R) * X.shape[1], T)
        flat = X.ravel()
        live = np.flatnonzero(self._feat[node] != LEAF)
        while live.size:
            nd = node[live]
            go_left = flat[base[live] + self._feat[nd]] <= self._thr[nd]
            nd = np.where(go_left, self._left[nd], self._right[nd])
            node[live] = nd
            live = live[self._feat[nd] != LEAF]
        return self._vote[node].reshape(R, T)

    def predict(self, X):
        votes = self.tree_votes(X)
        tally = np.zeros((len(votes), len(self.classes)), dtype=np.int64)
        np.add.at(tally, (np.repeat(np.arange(len(votes)), votes.shape[1]), votes.ravel()), 1)
        # argmax picks the first maximum, i.e. the lowest class id on ties
        return self.classes[np.argmax(tally, axis=1)]


def train_rf(X, y, config=TrainConfig()):
    """Bagged CART forest with ``features_per_split`` candidates per split."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, yi = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise SingleClass("random forest needs at least two classes")
    n, F = X.shape
    m = config.features_per_split or math.ceil(math.sqrt(F))
    m = min(m, F)
    trees = []
    for t in range(config.trees_count):
        boot = _rng.derive_rng(config.seed, _rng.BOOTSTRAP, t).integers(0, n, size=n)
        rng = _rng.derive_rng(config.seed, _rng.TRAINING, t)
        trees.append(fit_tree(X[boot], yi[boot], len(classes), config.max_depth,
                              config.min_samples_leaf, m, rng))
    return RandomForestModel(trees, classes, F, m, config.seed)
