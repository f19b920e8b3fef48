"""Brute-force reference solvers, independent of the production code paths.

Each ``check_*`` function draws small random instances (dimension at most 4)
and returns the largest discrepancy between the production solver and its
reference.  They back the oracle-equivalence criterion and the tests.
"""

from __future__ import annotations

import itertools

import numpy as np

from .geometry import Ball, Box, HalfspaceIntersection, simplex_project
from .invariant import invariant_measure
from .zerosum import solve


def simplex_project_reference(v) -> np.ndarray:
    """Enumerate supports and keep the one satisfying the KKT conditions."""
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            S = list(S)
            tau = (v[S].sum() - 1.0) / k
            x = np.zeros(n)
            x[S] = v[S] - tau
            rest = [i for i in range(n) if i not in S]
            if np.all(x[S] >= -1e-12) and all(v[i] - tau <= 1e-12 for i in rest):
                return np.maximum(x, 0.0)
    raise AssertionError("no support satisfies the KKT conditions")


def polytope_project_reference(z, A, b) -> np.ndarray:
    """Projection on ``{A x <= b}`` by enumerating active sets of size at most ``d``."""
    z = np.asarray(z, dtype=float)
    A, b = np.asarray(A, dtype=float), np.asarray(b, dtype=float)
    if np.all(A @ z <= b + 1e-12):
        return z.copy()
    m, d = A.shape
    best, best_dist = None, np.inf
    for k in range(1, min(m, d) + 1):
        for S in itertools.combinations(range(m), k):
            As, bs = A[list(S)], b[list(S)]
            G = As @ As.T
            if np.linalg.matrix_rank(G) < k:
                continue
            lam = np.linalg.solve(G, As @ z - bs)
            if np.any(lam < -1e-10):
                continue
            x = z - As.T @ lam
            if np.all(A @ x <= b + 1e-9):
                dist = np.linalg.norm(z - x)
                if dist < best_dist:
                    best, best_dist = x, dist
    if best is None:
        raise AssertionError("no active set satisfies the KKT conditions")
    return best


def ball_project_reference(z, c, r) -> np.ndarray:
    """Ball projection by bisection on the KKT multiplier.

    The minimiser of ``|x - z|^2 + lam (|x - c|^2 - r^2)`` is
    ``(z + lam c) / (1 + lam)``; ``lam`` is found by bisection so that the
    constraint is tight, or is zero when ``z`` is already inside.
    """
    z, c = np.asarray(z, dtype=float), np.asarray(c, dtype=float)
    if np.linalg.norm(z - c) <= r:
        return z.copy()
    lo, hi = 0.0, 1.0
    while np.linalg.norm((z + hi * c) / (1.0 + hi) - c) > r:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm((z + mid * c) / (1.0 + mid) - c) > r:
            lo = mid
        else:
            hi = mid
    return (z + hi * c) / (1.0 + hi)


def game_value_reference(M) -> float:
    """Value of the zero-sum game through scipy's LP solver."""
    from scipy.optimize import linprog

    M = np.asarray(M, dtype=float)
    A, B = M.shape
    # max v  s.t.  x^T M[:, b] >= v for all b, x in simplex
    c = np.r_[np.zeros(A), -1.0]
    A_ub = np.c_[-M.T, np.ones(B)]
    A_eq = np.r_[np.ones(A), 0.0][None, :]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(B), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * A + [(None, None)], method="highs")
    return float(-res.fun)


def invariant_reference(M) -> np.ndarray:
    """Long-run average law of the lazy uniformised chain started uniform.

    The lazy chain is aperiodic, so its powers converge; sixty squarings
    reach ``P^(2^60)``.  Rows are renormalised after each squaring so that
    rounding cannot inflate the closed classes.
    """
    M = np.array(M, dtype=float)
    np.fill_diagonal(M, 0.0)
    A = M.shape[0]
    out = M.sum(axis=1)
    c = 2.0 * out.max()
    if c == 0:
        return np.full(A, 1.0 / A)
    P = np.eye(A) + (M - np.diag(out)) / c
    for _ in range(60):
        P = P @ P
        P /= P.sum(axis=1, keepdims=True)
    p = np.full(A, 1.0 / A) @ P
    return p / p.sum()


def _random_polytope(rng, d):
    m = int(rng.integers(1, 7))
    A = rng.normal(size=(m, d))
    witness = rng.normal(size=d)
    b = A @ witness + rng.uniform(0.0, 1.0, m)
    return A, b, witness


def check_projections(instances: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(instances):
        d = int(rng.integers(1, 5))
        z = rng.normal(scale=2.0, size=d)
        kind = i % 3
        if kind == 0:
            lo = rng.normal(size=d)
            hi = lo + rng.uniform(0.0, 2.0, d)
            got = Box(lo, hi).project(z)[0]
            ref = polytope_project_reference(z, np.r_[np.eye(d), -np.eye(d)], np.r_[hi, -lo])
        elif kind == 1:
            c = rng.normal(size=d)
            r = rng.uniform(0.1, 2.0)
            got = Ball(c, r).project(z)[0]
            ref = ball_project_reference(z, c, r)
        else:
            A, b, w = _random_polytope(rng, d)
            got = HalfspaceIntersection(A, b, w).project(z)[0]
            ref = polytope_project_reference(z, A, b)
        worst = max(worst, float(np.abs(got - ref).max()))
    return worst


def check_simplex_projection(instances: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(instances):
        v = rng.normal(scale=1.5, size=int(rng.integers(1, 5)))
        worst = max(worst, float(np.abs(simplex_project(v) - simplex_project_reference(v)).max()))
    return worst


def check_game_values(instances: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed + 2)
    worst = 0.0
    for i in range(instances):
        shape = tuple(rng.integers(1, 5, size=2))
        M = rng.uniform(-1.0, 1.0, shape)
        if i % 4 == 0:
            M = np.round(M * 2) / 2  # ties and degenerate games
        worst = max(worst, abs(solve(M)[0] - game_value_reference(M)))
    return worst


def check_invariant_measures(instances: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed + 3)
    worst = 0.0
    for _ in range(instances):
        A = int(rng.integers(1, 5))
        M = rng.random((A, A)) * (rng.random((A, A)) < rng.uniform(0.3, 1.0))
        worst = max(worst, float(np.abs(invariant_measure(M) - invariant_reference(M)).max()))
    return worst


CHECKS = {
    "projections": check_projections,
    "simplex projection": check_simplex_projection,
    "zero-sum values": check_game_values,
    "invariant measures": check_invariant_measures,
}
