"""Limited-memory BFGS with a strong-Wolfe line search."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class OptimizationError(RuntimeError):
    pass


class NonFiniteError(OptimizationError):
    """Objective or gradient evaluated to NaN/inf."""


class LineSearchError(OptimizationError):
    """No step satisfying the strong Wolfe conditions was found."""


@dataclass
class LBFGSResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    converged: bool
    history: list = field(default_factory=list)

    @property
    def grad_norm(self):
        return float(np.max(np.abs(self.grad))) if self.grad.size else 0.0


def _checked(fun, x):
    f, g = fun(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFiniteError("objective or gradient is not finite")
    return f, g


def _cubicmin(a, fa, fpa, b, fb, c, fc):
    # minimizer of the cubic through (a, fa) with slope fpa, (b, fb), (c, fc)
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            C = fpa
            db, dc = b - a, c - a
            denom = (db * dc) ** 2 * (db - dc)
            d1 = np.array([[dc ** 2, -db ** 2], [-dc ** 3, db ** 3]])
            A, B = d1 @ np.array([fb - fa - C * db, fc - fa - C * dc]) / denom
            radical = B * B - 3 * A * C
            xmin = a + (-B + np.sqrt(radical)) / (3 * A)
        except (ArithmeticError, FloatingPointError):
            return None
    return xmin if np.isfinite(xmin) else None


def _quadmin(a, fa, fpa, b, fb):
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            db = b - a
            B = (fb - fa - fpa * db) / (db * db)
            xmin = a - fpa / (2.0 * B)
        except (ArithmeticError, FloatingPointError):
            return None
    return xmin if np.isfinite(xmin) else None


def strong_wolfe(fun, x, f0, g0, d, alpha0=1.0, c1=1e-4, c2=0.9, alpha_max=1e10,
                 max_iter=50):
    """Bracketing/zoom line search along ``d``.

    Returns ``(alpha, f, g)`` for a step satisfying
    ``f(x + a d) <= f0 + c1 a g0.d`` and ``|g(x + a d).d| <= c2 |g0.d|``.
    Once the change in ``f`` is at round-off level only the curvature
    condition is enforced, and bracketing follows the sign of the slope.
    """
    dphi0 = float(g0 @ d)
    if dphi0 >= 0:
        raise LineSearchError("search direction is not a descent direction")
    eps_f = 1e-12 * max(abs(f0), 1e-300)

    def phi(a):
        f, g = _checked(fun, x + a * d)
        return f, g, float(g @ d)

    def noisy(f):
        return abs(f - f0) <= eps_f

    def zoom(a_lo, f_lo, dp_lo, a_hi, f_hi, dp_hi):
        a_rec, f_rec = 0.0, f0
        for i in range(max_iter):
            dalpha = a_hi - a_lo
            lo, hi = sorted((a_lo, a_hi))
            cchk, qchk = 0.2 * abs(dalpha), 0.1 * abs(dalpha)
            a_j = None
            if i > 0:
                a_j = _cubicmin(a_lo, f_lo, dp_lo, a_hi, f_hi, a_rec, f_rec)
            if a_j is None or a_j > hi - cchk or a_j < lo + cchk:
                a_j = _quadmin(a_lo, f_lo, dp_lo, a_hi, f_hi)
                if a_j is None or a_j > hi - qchk or a_j < lo + qchk:
                    a_j = lo + 0.5 * (hi - lo)
            f_j, g_j, dp_j = phi(a_j)
            if noisy(f_j):
                if abs(dp_j) <= -c2 * dphi0:
                    return a_j, f_j, g_j
                if dp_j > 0:
                    a_rec, f_rec = a_hi, f_hi
                    a_hi, f_hi, dp_hi = a_j, f_j, dp_j
                else:
                    a_rec, f_rec = a_lo, f_lo
                    a_lo, f_lo, dp_lo = a_j, f_j, dp_j
                continue
            if f_j > f0 + c1 * a_j * dphi0 or f_j >= f_lo:
                a_rec, f_rec = a_hi, f_hi
                a_hi, f_hi, dp_hi = a_j, f_j, dp_j
            else:
                if abs(dp_j) <= -c2 * dphi0:
                    return a_j, f_j, g_j
                if dp_j * (a_hi - a_lo) >= 0:
                    a_rec, f_rec = a_hi, f_hi
                    a_hi, f_hi, dp_hi = a_lo, f_lo, dp_lo
                else:
                    a_rec, f_rec = a_lo, f_lo
                a_lo, f_lo, dp_lo = a_j, f_j, dp_j
        raise LineSearchError("zoom phase did not satisfy the strong Wolfe conditions")

    a_prev, f_prev, dp_prev = 0.0, f0, dphi0
    a = min(alpha0, alpha_max)
    for i in range(max_iter):
        f_a, g_a, dp_a = phi(a)
        if noisy(f_a):
            if abs(dp_a) <= -c2 * dphi0:
                return a, f_a, g_a
            if dp_a > 0:
                return zoom(a_prev, f_prev, dp_prev, a, f_a, dp_a)
        elif f_a > f0 + c1 * a * dphi0 or (i > 0 and f_a >= f_prev):
            return zoom(a_prev, f_prev, dp_prev, a, f_a, dp_a)
        elif abs(dp_a) <= -c2 * dphi0:
            return a, f_a, g_a
        elif dp_a >= 0:
            return zoom(a, f_a, dp_a, a_prev, f_prev, dp_prev)
        a_prev, f_prev, dp_prev = a, f_a, dp_a
        a = min(2.0 * a, alpha_max)
    raise LineSearchError("bracketing phase exceeded its iteration budget")


def lbfgs_minimize(fun, x0, m=10, tol=1e-5, max_iter=1000, callback=None) -> LBFGSResult:
    """Minimize ``fun`` (returning ``(value, gradient)``) from ``x0``.

    Stops once the infinity norm of the gradient is at most ``tol`` or after
    ``max_iter`` iterations. Search directions come from the two-loop
    recursion over the last ``m`` curvature pairs.
    """
    if m < 1:
        raise ValueError("history size m must be >= 1")
    x = np.array(x0, dtype=np.float64).ravel()
    f, g = _checked(fun, x)
    history = [f]
    pairs = deque(maxlen=m)

    for k in range(max_iter):
        if np.max(np.abs(g), initial=0.0) <= tol:
            return LBFGSResult(x, f, g, k, True, history)

        q = g.copy()
        alphas = []
        for s, y, rho in reversed(pairs):
            a = rho * (s @ q)
            q -= a * y
            alphas.append(a)
        if pairs:
            s, y, _ = pairs[-1]
            q *= (s @ y) / (y @ y)
            step0 = 1.0
        else:
            step0 = min(1.0, 1.0 / np.sum(np.abs(g)))
        for (s, y, rho), a in zip(pairs, reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        d = -q

        try:
            alpha, f_new, g_new = strong_wolfe(fun, x, f, g, d, alpha0=step0)
        except LineSearchError:
            if not pairs:
                raise
            # stale curvature; restart from steepest descent once
            pairs.clear()
            d = -g
            alpha, f_new, g_new = strong_wolfe(fun, x, f, g, d,
                                               alpha0=min(1.0, 1.0 / np.sum(np.abs(g))))

        s = alpha * d
        y = g_new - g
        sy = float(s @ y)
        x = x + s
        if sy > 1e-10 * float(np.sqrt((s @ s) * (y @ y))):
            pairs.append((s, y, 1.0 / sy))
        f, g = f_new, g_new
        history.append(f)
        if callback is not None:
            callback(x)

    converged = np.max(np.abs(g), initial=0.0) <= tol
    return LBFGSResult(x, f, g, max_iter, bool(converged), history)
