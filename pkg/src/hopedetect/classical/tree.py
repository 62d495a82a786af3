"""Gini decision trees and bootstrap random forests over sparse or dense input."""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._splitter import best_split, nonconstant_features

LEAF = -1


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _as_csr(X):
    X = sp.csr_matrix(X, dtype=np.float64)
    X.eliminate_zeros()
    X.sort_indices()
    return X


class Tree:
    """Array-backed binary tree; ``value`` holds per-node class counts."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def node_count(self):
        return len(self.feature)

    @property
    def depth(self):
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.left[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def is_leaf(self, i):
        return self.left[i] == LEAF

    def apply(self, X):
        """Index of the leaf reached by each row of ``X``."""
        X = sp.csc_matrix(X, dtype=np.float64)
        n = X.shape[0]
        out = np.zeros(n, dtype=np.int64)
        stack = [(0, np.arange(n))]
        while stack:
            node, idx = stack.pop()
            if self.left[node] == LEAF or len(idx) == 0:
                out[idx] = node
                continue
            f = self.feature[node]
            col = np.zeros(n)
            lo, hi = X.indptr[f], X.indptr[f + 1]
            col[X.indices[lo:hi]] = X.data[lo:hi]
            go_left = col[idx] <= self.threshold[node]
            stack.append((self.right[node], idx[~go_left]))
            stack.append((self.left[node], idx[go_left]))
        return out

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def _best_split(sub, y_node, node_counts, candidate_rng, max_features):
    """Best (feature, threshold) for one node, or ``None`` when every feature is constant.

    ``sub`` is the node's rows as a CSC matrix. Splits send ``x <= threshold``
    left and minimize the weighted child gini.
    """
    if sub.nnz == 0:
        return None
    candidates = np.flatnonzero(nonconstant_features(sub.indptr, sub.data, sub.shape[0]))
    if len(candidates) == 0:
        return None
    if max_features is not None and len(candidates) > max_features:
        candidates = np.sort(candidate_rng.choice(candidates, size=max_features, replace=False))
    found, f, thr = best_split(sub.indptr, sub.indices, sub.data, y_node, node_counts,
                               candidates.astype(np.int64))
    return (int(f), float(thr)) if found else None


def build_tree(X, y_enc, n_classes, max_features=None, rng=None) -> Tree:
    """Grow a gini tree until every leaf is pure or has no valid split."""
    X = _as_csr(X)
    n = X.shape[0]
    rng = np.random.default_rng(rng)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(counts):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(counts)
        return len(feature) - 1

    root_counts = np.bincount(y_enc, minlength=n_classes).astype(np.float64)
    stack = [(new_node(root_counts), np.arange(n))]
    while stack:
        node, idx = stack.pop()
        counts = value[node]
        if np.count_nonzero(counts) <= 1:
            continue
        sub = X[idx].tocsc()
        sub.sort_indices()
        split = _best_split(sub, y_enc[idx], counts, rng, max_features)
        if split is None:
            continue
        f, thr = split
        xf = np.zeros(len(idx))
        lo, hi = sub.indptr[f], sub.indptr[f + 1]
        xf[sub.indices[lo:hi]] = sub.data[lo:hi]
        go_left = xf <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(np.bincount(y_enc[li], minlength=n_classes).astype(np.float64))
        right[node] = new_node(np.bincount(y_enc[ri], minlength=n_classes).astype(np.float64))
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return Tree(feature, threshold, left, right, value)


def _resolve_max_features(max_features, d):
    if max_features is None:
        return None
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    if isinstance(max_features, float):
        return max(1, math.ceil(max_features * d))
    return int(max_features)


class DecisionTreeClassifier(ClassifierMixin, BaseEstimator):
    """Unpruned CART classifier with the gini criterion.

    Candidate thresholds are midpoints between consecutive distinct values.
    Equal-impurity splits resolve to the lowest feature index, then the
    lowest threshold.
    """

    def __init__(self, max_features=None, random_state=0):
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, accept_sparse=["csr", "csc"], dtype=np.float64)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        self.tree_ = build_tree(X, y_enc, len(self.classes_),
                                _resolve_max_features(self.max_features, X.shape[1]),
                                np.random.default_rng(self.random_state))
        return self

    def _validate_X(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, accept_sparse=["csr", "csc"], dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, model expects {self.n_features_in_}")
        return X

    def predict_proba(self, X):
        counts = self.tree_.value[self.tree_.apply(self._validate_X(X))]
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, X):
        counts = self.tree_.value[self.tree_.apply(self._validate_X(X))]
        return self.classes_[np.argmax(counts, axis=1)]

    def _export(self):
        return {"classes": self.classes_.tolist(), "n_features_in": self.n_features_in_,
                "tree": self.tree_.to_dict()}

    def _import(self, state):
        self.classes_ = np.asarray(state["classes"])
        self.n_features_in_ = state["n_features_in"]
        self.tree_ = Tree.from_dict(state["tree"])
        return self


def _fit_forest_tree(X, y_enc, n_classes, bootstrap, max_features, seed):
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    if bootstrap:
        idx = rng.integers(0, n, size=n)
        X, y_enc = X[idx], y_enc[idx]
    return build_tree(X, y_enc, n_classes, max_features, rng)


class RandomForestClassifier(ClassifierMixin, BaseEstimator):
    """Bootstrap-aggregated gini trees combined by plurality vote.

    Each split draws ``ceil(sqrt(d))`` candidates among the features that
    are not constant at that node. Tree ``i`` is seeded from child ``i`` of
    ``SeedSequence(random_state)``, so results do not depend on ``n_jobs``.
    """

    def __init__(self, n_estimators=100, max_features="sqrt", bootstrap=True,
                 random_state=0, n_jobs=1):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = check_X_y(X, y, accept_sparse=["csr", "csc"], dtype=np.float64)
        X = _as_csr(X)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]
        m = _resolve_max_features(self.max_features, X.shape[1])
        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        self.trees_ = Parallel(n_jobs=self.n_jobs)(
            delayed(_fit_forest_tree)(X, y_enc, len(self.classes_), self.bootstrap, m, s)
            for s in seeds)
        return self

    _validate_X = DecisionTreeClassifier._validate_X

    def _votes(self, X):
        X = sp.csc_matrix(self._validate_X(X))
        votes = np.zeros((X.shape[0], len(self.classes_)), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees_:
            winner = np.argmax(tree.value[tree.apply(X)], axis=1)
            votes[rows, winner] += 1
        return votes

    def predict_proba(self, X):
        votes = self._votes(X)
        return votes / votes.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self._votes(X), axis=1)]

    def _export(self):
        return {"classes": self.classes_.tolist(), "n_features_in": self.n_features_in_,
                "trees": [t.to_dict() for t in self.trees_]}

    def _import(self, state):
        self.classes_ = np.asarray(state["classes"])
        self.n_features_in_ = state["n_features_in"]
        self.trees_ = [Tree.from_dict(t) for t in state["trees"]]
        return self


def train_tree(X, y, rng=0, **kwargs) -> DecisionTreeClassifier:
    return DecisionTreeClassifier(random_state=rng, **kwargs).fit(X, y)


def train_forest(X, y, n_estimators=100, rng=0, **kwargs) -> RandomForestClassifier:
    return RandomForestClassifier(n_estimators=n_estimators, random_state=rng, **kwargs).fit(X, y)
