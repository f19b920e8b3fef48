"""Invariant measures of nonnegative matrices and stationary laws of Markov chains.

When a chain has several closed classes its stationary law is not unique.
The canonical choice returned here is the long-run (Cesaro) law of the chain
started from the uniform distribution: every closed class receives the
uniform mass that is eventually absorbed into it.  That law does not depend
on how lazy the chain is, so uniformising a matrix with any admissible
constant gives the same answer.
"""

from __future__ import annotations

import numpy as np

from ._jit import jit
from .errors import NumericalError

STATIONARY_TOL = 1e-11
MAX_ITER = 1_000_000


@jit
def _reachability(P):
    d = P.shape[0]
    reach = np.zeros((d, d), dtype=np.bool_)
    for i in range(d):
        reach[i, i] = True
        for j in range(d):
            if P[i, j] > 0.0:
                reach[i, j] = True
    for k in range(d):
        for i in range(d):
            if reach[i, k]:
                for j in range(d):
                    if reach[k, j]:
                        reach[i, j] = True
    return reach


@jit
def _residual(P, lam):
    d = P.shape[0]
    worst = 0.0
    for j in range(d):
        s = 0.0
        for i in range(d):
            s += lam[i] * P[i, j]
        r = abs(s - lam[j])
        if r > worst:
            worst = r
    return worst


@jit
def stationary_kernel(P, tol, max_iter):
    """Canonical stationary law of a row-stochastic ``P``.

    Returns ``(lam, residual)``; ``residual > tol`` signals failure.
    """
    d = P.shape[0]
    reach = _reachability(P)
    label = np.full(d, -1, dtype=np.int64)
    for i in range(d):
        closed = True
        for j in range(d):
            if reach[i, j] and not reach[j, i]:
                closed = False
                break
        if closed:
            for j in range(d):
                if reach[i, j]:
                    label[i] = j
                    break
    ntrans = 0
    for i in range(d):
        if label[i] < 0:
            ntrans += 1
    trans = np.empty(ntrans, dtype=np.int64)
    t = 0
    for i in range(d):
        if label[i] < 0:
            trans[t] = i
            t += 1
    # Diagonals of I - P use the off-diagonal row mass: 1 - P[i, i] loses
    # every digit when a state leaks only a tiny amount.
    leave = np.zeros(d)
    for i in range(d):
        for j in range(d):
            if j != i:
                leave[i] += P[i, j]
    Q = np.zeros((ntrans, ntrans))
    for a in range(ntrans):
        for c in range(ntrans):
            if a == c:
                Q[a, c] = leave[trans[a]]
            else:
                Q[a, c] = -P[trans[a], trans[c]]
    lam = np.zeros(d)
    for root in range(d):
        if label[root] != root:
            continue
        k = 0
        for i in range(d):
            if label[i] == root:
                k += 1
        members = np.empty(k, dtype=np.int64)
        k = 0
        for i in range(d):
            if label[i] == root:
                members[k] = i
                k += 1
        # pi (P_SS - I) = 0 with one balance equation swapped for sum(pi) = 1
        S = np.empty((k, k))
        for a in range(k):
            for c in range(k):
                S[a, c] = P[members[c], members[a]]
            S[a, a] = -leave[members[a]]
        for c in range(k):
            S[k - 1, c] = 1.0
        rhs = np.zeros(k)
        rhs[k - 1] = 1.0
        pi = np.linalg.solve(S, rhs)
        mass = float(k)
        if ntrans > 0:
            into = np.zeros(ntrans)
            for a in range(ntrans):
                for c in range(k):
                    into[a] += P[trans[a], members[c]]
            h = np.linalg.solve(Q, into)
            for a in range(ntrans):
                mass += h[a]
        mass /= d
        for c in range(k):
            lam[members[c]] = mass * max(pi[c], 0.0)
    lam /= lam.sum()
    res = _residual(P, lam)
    it = 0
    while res > tol and it < max_iter:
        # lazy power iteration polishes round-off without changing the limit
        nxt = 0.5 * lam + 0.5 * (lam @ P)
        lam = nxt / nxt.sum()
        it += 1
        if it % 32 == 0:
            res = _residual(P, lam)
    if it > 0:
        res = _residual(P, lam)
    return lam, res


@jit
def uniformize_kernel(M):
    """Row-stochastic chain with the same invariant measures as ``M``.

    Returns ``(P, c)`` with ``c`` the largest row sum; ``c == 0`` means ``M`` is zero.
    """
    d = M.shape[0]
    rows = np.zeros(d)
    for i in range(d):
        for j in range(d):
            rows[i] += M[i, j]
    c = rows.max()
    P = np.eye(d)
    if c <= 0.0:
        return P, 0.0
    for i in range(d):
        for j in range(d):
            if i != j:
                P[i, j] = M[i, j] / c
        P[i, i] = (M[i, i] + c - rows[i]) / c
    return P, c


@jit
def invariant_measure_kernel(M, tol, max_iter):
    d = M.shape[0]
    P, c = uniformize_kernel(M)
    if c <= 0.0:
        return np.full(d, 1.0 / d), 0.0
    lam, res = stationary_kernel(P, tol, max_iter)
    return lam, res * c


def _square_nonneg(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix")
    if not np.all(np.isfinite(M)) or np.any(M < 0):
        raise ValueError(f"{name} must have finite nonnegative entries")
    return M


def stationary(P, tol: float = STATIONARY_TOL, max_iter: int = MAX_ITER) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix (canonical choice)."""
    P = _square_nonneg(P, "transition matrix")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("transition matrix rows must sum to 1")
    lam, res = stationary_kernel(P, tol, max_iter)
    if not res <= tol:
        raise NumericalError("stationary distribution did not converge", res)
    return lam


def invariant_measure(M, tol: float = 1e-8, max_iter: int = MAX_ITER) -> np.ndarray:
    """Probability ``lam`` with ``sum_k lam_k M[k, i] = lam_i sum_k M[i, k]`` for all ``i``."""
    M = _square_nonneg(M, "matrix")
    lam, res = invariant_measure_kernel(M, STATIONARY_TOL, max_iter)
    if not res <= tol:
        raise NumericalError("invariant measure did not converge", res)
    return lam


def balance_residual(M, lam) -> float:
    """Largest violation of the balance equations for ``lam``."""
    M = np.asarray(M, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return float(np.abs(lam @ M - lam * M.sum(axis=1)).max())
