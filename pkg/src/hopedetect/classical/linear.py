"""Multinomial logistic regression and one-vs-rest linear SVM."""
from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp, softmax
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._dcd import dual_cd_binary
from .lbfgs import lbfgs_minimize


def _check_targets(y):
    classes, y_enc = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ValueError(f"need at least 2 distinct classes, got {len(classes)}")
    return classes, y_enc


class LinearClassifierMixin:
    """Shared argmax-of-decision-values predict path."""

    def _validate_X(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        if X.shape[1] != self.coef_.shape[1]:
            raise ValueError(f"X has {X.shape[1]} features, model expects {self.coef_.shape[1]}")
        return X

    def decision_function(self, X):
        X = self._validate_X(X)
        scores = X @ self.coef_.T
        return np.asarray(scores) + self.intercept_

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def _export(self):
        return {
            "classes": self.classes_.tolist(),
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_.tolist(),
        }

    def _import(self, state):
        self.classes_ = np.asarray(state["classes"])
        self.coef_ = np.asarray(state["coef"], dtype=np.float64).reshape(len(self.classes_), -1)
        self.intercept_ = np.asarray(state["intercept"], dtype=np.float64)
        self.n_features_in_ = self.coef_.shape[1]
        return self


def logistic_objective(theta, X, Y, C):
    """Scaled multinomial objective and gradient.

    ``theta`` packs ``W`` (K x d, row-major) followed by ``b`` (K). Returns
    ``(||W||^2 / 2 + C * sum_i CE_i) / (C n)``, which has the same minimizer
    as the unscaled objective but an ``n``- and ``C``-free gradient scale.
    """
    n, d = X.shape
    K = Y.shape[1]
    W = theta[: K * d].reshape(K, d)
    b = theta[K * d:]
    Z = np.asarray(X @ W.T) + b
    lse = logsumexp(Z, axis=1)
    loss = np.sum(lse - np.sum(Z * Y, axis=1)) / n
    P = np.exp(Z - lse[:, None])
    R = (P - Y) / n
    gW = np.asarray((X.T @ R).T) + W / (C * n)
    gb = R.sum(axis=0)
    value = loss + 0.5 * np.sum(W * W) / (C * n)
    return value, np.concatenate([gW.ravel(), gb])


class LogisticRegression(LinearClassifierMixin, ClassifierMixin, BaseEstimator):
    """Softmax regression with an L2 penalty on the weights, fit by L-BFGS.

    Minimizes ``||W||^2 / 2 + C * sum_i cross_entropy(softmax(W x_i + b), y_i)``;
    the biases are not penalized.

    Parameters
    ----------
    C : float
        Inverse regularization strength.
    tol : float
        Infinity-norm tolerance on the gradient of the scaled objective.
    max_iter : int
    history : int
        Number of curvature pairs kept by L-BFGS.
    """

    def __init__(self, C=1.0, tol=1e-4, max_iter=1000, history=10):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter
        self.history = history

    def fit(self, X, y):
        if self.C <= 0:
            raise ValueError("C must be positive")
        X, y = check_X_y(X, y, accept_sparse="csr", dtype=np.float64)
        self.classes_, y_enc = _check_targets(y)
        n, d = X.shape
        K = len(self.classes_)
        Y = np.zeros((n, K))
        Y[np.arange(n), y_enc] = 1.0
        result = lbfgs_minimize(
            lambda t: logistic_objective(t, X, Y, self.C),
            np.zeros(K * d + K), m=self.history, tol=self.tol, max_iter=self.max_iter,
        )
        if not result.converged:
            warnings.warn(f"L-BFGS stopped after {result.n_iter} iterations "
                          f"(|grad|_inf={result.grad_norm:.2e})", ConvergenceWarning)
        self.coef_ = result.x[: K * d].reshape(K, d).copy()
        self.intercept_ = result.x[K * d:].copy()
        self.n_iter_ = result.n_iter
        self.objective_history_ = result.history
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        return softmax(self.decision_function(X), axis=1)


class LinearSVC(LinearClassifierMixin, ClassifierMixin, BaseEstimator):
    """One-vs-rest linear SVM with hinge loss, solved in the dual.

    Each class ``k`` solves ``min ||w||^2 / 2 + C * sum_i max(0, 1 - y_ik w.[x_i, 1])``
    by randomized dual coordinate descent until the relative duality gap
    drops below ``tol``. The bias is the weight of an appended constant
    feature and is therefore regularized.
    """

    def __init__(self, C=1.0, tol=1e-4, max_iter=1000, random_state=0):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y):
        if self.C <= 0:
            raise ValueError("C must be positive")
        X, y = check_X_y(X, y, accept_sparse="csr", dtype=np.float64)
        X = sp.csr_matrix(X)
        self.classes_, y_enc = _check_targets(y)
        n, d = X.shape
        K = len(self.classes_)
        data = X.data.astype(np.float64)
        indices = X.indices.astype(np.int64)
        indptr = X.indptr.astype(np.int64)
        seeds = np.random.SeedSequence(self.random_state).generate_state(K)

        self.coef_ = np.zeros((K, d))
        self.intercept_ = np.zeros(K)
        self.dual_coef_ = np.zeros((K, n))
        self.primal_objective_ = np.zeros(K)
        self.dual_objective_ = np.zeros(K)
        self.n_iter_ = np.zeros(K, dtype=np.int64)
        for k in range(K):
            yk = np.where(y_enc == k, 1.0, -1.0)
            w = np.zeros(d + 1)
            alpha = np.zeros(n)
            epochs, primal, dual = dual_cd_binary(
                data, indices, indptr, yk, float(self.C), float(self.tol),
                int(self.max_iter), int(seeds[k] % (2 ** 31)), w, alpha)
            if primal - dual > self.tol * (1 + abs(primal)):
                warnings.warn(f"dual CD for class {self.classes_[k]!r} stopped at gap "
                              f"{primal - dual:.2e}", ConvergenceWarning)
            self.coef_[k] = w[:d]
            self.intercept_[k] = w[d]
            self.dual_coef_[k] = alpha
            self.primal_objective_[k] = primal
            self.dual_objective_[k] = dual
            self.n_iter_[k] = epochs
        self.n_features_in_ = d
        return self

    @property
    def duality_gap_(self):
        return self.primal_objective_ - self.dual_objective_


def train_logistic(X, y, C, **kwargs) -> LogisticRegression:
    return LogisticRegression(C=C, **kwargs).fit(X, y)


def train_svm(X, y, C, **kwargs) -> LinearSVC:
    return LinearSVC(C=C, **kwargs).fit(X, y)
