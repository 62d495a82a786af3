"""Compiled gini split search over one node's CSC slice.

Only nonzero entries are stored; implicit zeros of a feature are treated
as one block whose class counts are the node counts minus the nonzero
counts.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def nonconstant_features(indptr, vals, n_node):
    d = indptr.shape[0] - 1
    out = np.zeros(d, dtype=np.bool_)
    for f in range(d):
        s, e = indptr[f], indptr[f + 1]
        if e == s:
            continue
        if e - s < n_node:
            out[f] = True
            continue
        lo = vals[s]
        hi = vals[s]
        for p in range(s + 1, e):
            if vals[p] < lo:
                lo = vals[p]
            elif vals[p] > hi:
                hi = vals[p]
        out[f] = lo < hi
    return out


@njit(cache=True)
def _score(left, node_counts, nl, n):
    # sum(L^2)/nL + sum(R^2)/nR; larger means lower weighted gini
    sl = 0.0
    sr = 0.0
    for k in range(left.shape[0]):
        r = node_counts[k] - left[k]
        sl += left[k] * left[k]
        sr += r * r
    return sl / nl + sr / (n - nl)


@njit(cache=True)
def best_split(indptr, rows, vals, y_node, node_counts, candidates):
    """Return ``(found, feature, threshold)`` maximizing the gini decrease.

    Candidates are scanned in the given order and thresholds ascending;
    the first maximum wins.
    """
    K = node_counts.shape[0]
    n = 0.0
    for k in range(K):
        n += node_counts[k]
    best_score = -1.0
    best_f = -1
    best_thr = 0.0
    left = np.zeros(K)
    zeros = np.zeros(K)
    for ci in range(candidates.shape[0]):
        f = candidates[ci]
        s, e = indptr[f], indptr[f + 1]
        m = e - s
        fv = vals[s:e]
        fr = rows[s:e]
        order = np.argsort(fv)
        for k in range(K):
            zeros[k] = node_counts[k]
            left[k] = 0.0
        for p in range(m):
            zeros[y_node[fr[p]]] -= 1.0
        n_zero = n - m
        nl = 0.0
        prev = 0.0
        started = False
        zero_done = n_zero <= 0
        p = 0
        while p < m or not zero_done:
            # next item: the zero block goes before the first positive value
            take_zero = (not zero_done) and (p >= m or fv[order[p]] > 0.0)
            v = 0.0 if take_zero else fv[order[p]]
            if started and v > prev:
                sc = _score(left, node_counts, nl, n)
                if sc > best_score:
                    best_score = sc
                    best_f = f
                    thr = prev / 2.0 + v / 2.0
                    if not (prev <= thr < v):
                        thr = prev
                    best_thr = thr
            if take_zero:
                for k in range(K):
                    left[k] += zeros[k]
                nl += n_zero
                zero_done = True
            else:
                left[y_node[fr[order[p]]]] += 1.0
                nl += 1.0
                p += 1
            prev = v
            started = True
    return best_f >= 0, best_f, best_thr
