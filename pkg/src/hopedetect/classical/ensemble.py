"""Hard majority voting over fitted classifiers."""
from __future__ import annotations

from collections import Counter

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.pipeline import make_pipeline
from sklearn.utils.validation import check_is_fitted

from ..features import DocumentFrequencySelector
from .linear import LinearSVC, LogisticRegression
from .tree import DecisionTreeClassifier, RandomForestClassifier

TIE_POLICIES = ("first", "smallest")


def majority_vote(predictions, policy="first") -> list:
    """Per position, the label predicted by the most members.

    Ties resolve to the tied label voted by the earliest member
    (``policy="first"``) or to the smallest tied label (``"smallest"``).
    """
    predictions = [list(p) for p in predictions]
    if len(predictions) < 2:
        raise ValueError("majority vote needs at least 2 members")
    n = len(predictions[0])
    if n == 0 or any(len(p) != n for p in predictions):
        raise ValueError("member predictions must be non-empty and of equal length")
    if policy not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {policy!r}")
    out = []
    for votes in zip(*predictions):
        counts = Counter(votes)
        top = max(counts.values())
        tied = [label for label, c in counts.items() if c == top]
        if len(tied) == 1:
            out.append(tied[0])
        elif policy == "first":
            out.append(next(v for v in votes if counts[v] == top))
        else:
            out.append(min(tied))
    return out


class MajorityVoteClassifier(ClassifierMixin, BaseEstimator):
    """Fit every ``(name, estimator)`` member on the same data and vote.

    Member order matters: it is the tie-break order for ``tie_policy="first"``.
    """

    def __init__(self, estimators, tie_policy="first"):
        self.estimators = estimators
        self.tie_policy = tie_policy

    def fit(self, X, y):
        if len(self.estimators) < 2:
            raise ValueError("need at least 2 member estimators")
        self.estimators_ = [clone(est).fit(X, y) for _, est in self.estimators]
        classes = [tuple(np.asarray(_classes(e)).tolist()) for e in self.estimators_]
        if len(set(classes)) != 1:
            raise ValueError("ensemble members disagree on the class set")
        self.classes_ = np.asarray(classes[0])
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def named_estimators_(self):
        return {name: est for (name, _), est in zip(self.estimators, self.estimators_)}

    def member_predictions(self, X):
        check_is_fitted(self, "estimators_")
        return [est.predict(X) for est in self.estimators_]

    def predict(self, X):
        votes = majority_vote(self.member_predictions(X), self.tie_policy)
        return np.asarray(votes, dtype=self.classes_.dtype)


def _classes(est):
    return est.classes_ if hasattr(est, "classes_") else est[-1].classes_


def build_ensemble(svm_C=1.0, lr_C=1.0, n_estimators=100, tree_max_features=20000,
                   random_state=0, tie_policy="first", n_jobs=1) -> MajorityVoteClassifier:
    """The four-member SVM, LR, DT, RF vote.

    Trees see only the ``tree_max_features`` most frequent columns.
    """
    return MajorityVoteClassifier(
        [
            ("svm", LinearSVC(C=svm_C, random_state=random_state)),
            ("lr", LogisticRegression(C=lr_C)),
            ("dt", make_pipeline(DocumentFrequencySelector(tree_max_features),
                                 DecisionTreeClassifier(random_state=random_state))),
            ("rf", make_pipeline(DocumentFrequencySelector(tree_max_features),
                                 RandomForestClassifier(n_estimators=n_estimators,
                                                        random_state=random_state,
                                                        n_jobs=n_jobs))),
        ],
        tie_policy=tie_policy,
    )
