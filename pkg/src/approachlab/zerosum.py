"""Finite two-player zero-sum games: exact values and optimal strategies.

The row player maximises ``x^T rho y``.  Values come from a primal simplex
method (Bland's rule) on the positive-shifted game; both optimal strategies
are read off one final tableau.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from ._jit import jit
from .errors import NumericalError


@jit
def simplex_game_kernel(M):
    """Solve ``max_x min_y x^T M y``.  Returns ``(value, x, y, status)``.

    ``status`` is 0 on success and 1 if the pivot limit was hit.
    """
    A, B = M.shape
    shift = 1.0 - M.min()
    ncol = B + A
    T = np.zeros((A, ncol))
    rhs = np.ones(A)
    for i in range(A):
        for j in range(B):
            T[i, j] = M[i, j] + shift
        T[i, B + i] = 1.0
    red = np.zeros(ncol)
    for j in range(B):
        red[j] = 1.0
    basis = np.empty(A, dtype=np.int64)
    for i in range(A):
        basis[i] = B + i
    obj = 0.0
    status = 1
    for _ in range(50 * (ncol + 1) * (A + 1)):
        enter = -1
        for j in range(ncol):
            if red[j] > 1e-12:
                enter = j
                break
        if enter < 0:
            status = 0
            break
        leave = -1
        best = np.inf
        for i in range(A):
            if T[i, enter] > 1e-12:
                ratio = rhs[i] / T[i, enter]
                if ratio < best - 1e-15 or (abs(ratio - best) <= 1e-15 and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            break  # unbounded cannot happen for a positive matrix
        piv = T[leave, enter]
        for j in range(ncol):
            T[leave, j] /= piv
        rhs[leave] /= piv
        for i in range(A):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    for j in range(ncol):
                        T[i, j] -= f * T[leave, j]
                    rhs[i] -= f * rhs[leave]
        f = red[enter]
        for j in range(ncol):
            red[j] -= f * T[leave, j]
        obj += f * rhs[leave]
        basis[leave] = enter
    y = np.zeros(B)
    for i in range(A):
        if basis[i] < B:
            y[basis[i]] = rhs[i]
    x = np.empty(A)
    for i in range(A):
        x[i] = max(-red[B + i], 0.0)
    sy = y.sum()
    sx = x.sum()
    y = y / sy
    x = x / sx
    value = 1.0 / obj - shift
    return value, x, y, status


@jit
def row_optimal_kernel(M):
    """Optimal mixed strategy of the maximising row player (kernel helper)."""
    value, x, y, status = simplex_game_kernel(M)
    return x


@jit
def row_minimizer_kernel(M):
    """Mixed strategy of a row player who *minimises* ``x^T M y``."""
    value, x, y, status = simplex_game_kernel(-M)
    return x


def _mw_fallback(M, eps, max_iter=1_000_000):
    # Multiplicative-weights self play; used only if the simplex result fails
    # its optimality certificate.
    A, B = M.shape
    lo, hi = M.min(), M.max()
    span = max(hi - lo, 1e-300)
    P = (M - lo) / span
    wa = np.zeros(A)
    wb = np.zeros(B)
    xs = np.zeros(A)
    ys = np.zeros(B)
    for t in range(1, max_iter + 1):
        eta = np.sqrt(8 * np.log(max(A, B, 2)) / t)
        x = np.exp(eta * (wa - wa.max()))
        x /= x.sum()
        y = np.exp(-eta * (wb - wb.min()))
        y /= y.sum()
        xs += x
        ys += y
        wa += P @ y
        wb += x @ P
        if t % 1000 == 0:
            xa, ya = xs / t, ys / t
            gap = (P @ ya).max() - (xa @ P).min()
            if gap * span <= eps:
                v = 0.5 * ((xa @ M).min() + (M @ ya).max())
                return v, xa, ya
    raise NumericalError("zero-sum fallback did not reach the requested gap", gap * span)


class ScalarGame:
    """Payoff matrix ``rho[a, b]`` paid to the maximising row player."""

    def __init__(self, payoffs):
        M = np.asarray(payoffs, dtype=float)
        if M.ndim != 2 or M.size == 0:
            raise ValueError("payoff matrix must be a non-empty 2-d array")
        if not np.all(np.isfinite(M)):
            raise ValueError("payoff matrix has non-finite entries")
        self.payoffs = M

    @property
    def shape(self):
        return self.payoffs.shape


def _matrix(game) -> np.ndarray:
    if isinstance(game, ScalarGame):
        return game.payoffs
    return ScalarGame(game).payoffs


def solve(game, eps: float = 1e-9) -> Tuple[float, np.ndarray, np.ndarray]:
    """Value and optimal strategies ``(v, x, y)`` of a zero-sum game.

    ``x`` guarantees at least ``v - eps`` against every column and ``y``
    concedes at most ``v + eps`` against every row.
    """
    M = _matrix(game)
    v, x, y, status = simplex_game_kernel(M)
    if status == 0:
        lo = (x @ M).min()
        hi = (M @ y).max()
        if lo >= v - eps and hi <= v + eps:
            return float(v), x, y
    v, x, y = _mw_fallback(M, eps)
    return float(v), x, y


def value(game, eps: float = 1e-9) -> float:
    return solve(game, eps)[0]


def exploitability(game, x, y, eps: float = 1e-9) -> Tuple[float, float]:
    """``(row_gap, col_gap)``: how much each strategy concedes against a best reply."""
    M = _matrix(game)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = value(M, eps)
    return float(v - (x @ M).min()), float((M @ y).max() - v)
