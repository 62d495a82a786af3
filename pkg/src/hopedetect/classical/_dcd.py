"""Dual coordinate descent kernel for the L2-regularized hinge-loss SVM."""
import numpy as np
from numba import njit


@njit(cache=True)
def _row_dot(w, data, indices, start, stop, bias_col):
    s = w[bias_col]
    for p in range(start, stop):
        s += w[indices[p]] * data[p]
    return s


@njit(cache=True)
def _objectives(w, alpha, data, indices, indptr, y, C):
    n = y.shape[0]
    d1 = w.shape[0] - 1
    ww = 0.0
    for j in range(w.shape[0]):
        ww += w[j] * w[j]
    hinge = 0.0
    asum = 0.0
    for i in range(n):
        m = 1.0 - y[i] * _row_dot(w, data, indices, indptr[i], indptr[i + 1], d1)
        if m > 0.0:
            hinge += m
        asum += alpha[i]
    return 0.5 * ww + C * hinge, asum - 0.5 * ww


@njit(cache=True)
def dual_cd_binary(data, indices, indptr, y, C, tol, max_iter, seed, w, alpha):
    """Solve one +-1 problem in place; the last entry of ``w`` is the bias.

    Each row is augmented with a constant 1 so the bias is part of ``w``.
    Returns ``(epochs, primal, dual)``; stops when
    ``primal - dual <= tol * (1 + |primal|)``.
    """
    n = y.shape[0]
    d1 = w.shape[0] - 1
    qii = np.empty(n)
    for i in range(n):
        s = 1.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * data[p]
        qii[i] = s
    np.random.seed(seed)
    order = np.arange(n)
    primal = 0.0
    dual = 0.0
    for epoch in range(max_iter):
        np.random.shuffle(order)
        for k in range(n):
            i = order[k]
            start, stop = indptr[i], indptr[i + 1]
            G = y[i] * _row_dot(w, data, indices, start, stop, d1) - 1.0
            a_old = alpha[i]
            a_new = a_old - G / qii[i]
            if a_new < 0.0:
                a_new = 0.0
            elif a_new > C:
                a_new = C
            if a_new != a_old:
                delta = (a_new - a_old) * y[i]
                for p in range(start, stop):
                    w[indices[p]] += delta * data[p]
                w[d1] += delta
                alpha[i] = a_new
        primal, dual = _objectives(w, alpha, data, indices, indptr, y, C)
        if primal - dual <= tol * (1.0 + abs(primal)):
            return epoch + 1, primal, dual
    return max_iter, primal, dual


def svm_objectives(w, alpha, X, y, C):
    """Primal and dual objective of the bias-augmented problem."""
    X = X.tocsr()
    return _objectives(w, alpha, X.data, X.indices.astype(np.int64),
                       X.indptr.astype(np.int64), y.astype(np.float64), float(C))
