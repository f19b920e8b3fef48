"""Whole-episode loops for Monte-Carlo runs.

Each kernel takes a pre-drawn array ``u`` of shape ``(n, 2)`` holding the
episode's uniforms (column 0 for the player, column 1 for Nature; the same
stream ``numpy.random.default_rng(seed).random((n, 2))``) and returns
running statistics at the requested checkpoint stages.  Strategies call the
same step kernels as their engine counterparts in the other modules.
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import jit
from .approach import blackwell_mixed_kernel, potential_mixed_kernel
from .calibration import calib_mixed_kernel
from .geometry import project_encoded, simplex_project_kernel
from .invariant import invariant_measure_kernel
from .regret import regret_matching_kernel, softmax_kernel, theta_kernel

ALGO_RM = 0
ALGO_EW = 1
ALGO_INTERNAL = 2
ALGO_PHI = 3
ALGO_OGD = 4
ALGORITHMS = {"regret_matching": ALGO_RM, "exp_weights": ALGO_EW,
              "internal": ALGO_INTERNAL, "phi": ALGO_PHI, "ogd": ALGO_OGD}

NATURE_IID = 0
NATURE_ADAPTIVE = 1
NATURES = {"iid": NATURE_IID, "adaptive": NATURE_ADAPTIVE}


@jit
def sample_kernel(p, u):
    total = 0.0
    for i in range(p.shape[0]):
        total += p[i]
    t = u * total
    c = 0.0
    for i in range(p.shape[0]):
        c += p[i]
        if c > t:
            return i
    return p.shape[0] - 1


@jit
def _mixed_regret_player(algo, A, r_sum, R_sum, phi_sum, cum, x_ogd, n, maps):
    if algo == 0:
        return regret_matching_kernel(r_sum)
    if algo == 1:
        if n == 0 or A == 1:
            return np.full(A, 1.0 / A)
        return softmax_kernel(math.sqrt(8.0 * math.log(A) / n) * cum)
    if algo == 2:
        M = np.maximum(R_sum, 0.0) / max(n, 1)
        lam, res = invariant_measure_kernel(M, 1e-11, 1000000)
        return lam
    if algo == 3:
        T = theta_kernel(np.maximum(phi_sum, 0.0) / max(n, 1), maps)
        for a in range(A):
            T[a, a] = 0.0
        lam, res = invariant_measure_kernel(T, 1e-11, 1000000)
        return lam
    return x_ogd.copy()


@jit
def regret_episode_kernel(rho, algo, nature, probs, maps, u, checkpoints):
    """Scalar-payoff episode for one learner.

    Returns snapshots of ``(r_sum, R_sum, phi_sum)`` at each checkpoint.
    Adaptive Nature best-responds to the learner's current mixed action
    (minimises its expected payoff, ties to the lowest index).
    """
    A, B = rho.shape
    P = maps.shape[0]
    n = u.shape[0]
    C = checkpoints.shape[0]
    r_sum = np.zeros(A)
    R_sum = np.zeros((A, A))
    phi_sum = np.zeros(P)
    cum = np.zeros(A)
    x_ogd = np.full(A, 1.0 / A)
    block = 0
    in_block = 0
    out_r = np.zeros((C, A))
    out_R = np.zeros((C, A, A))
    out_phi = np.zeros((C, P))
    c = 0
    for m in range(n):
        x = _mixed_regret_player(algo, A, r_sum, R_sum, phi_sum, cum, x_ogd, m, maps)
        a = sample_kernel(x, u[m, 0])
        if nature == 0:
            b = sample_kernel(probs, u[m, 1])
        else:
            b = 0
            best = np.inf
            for bb in range(B):
                v = 0.0
                for aa in range(A):
                    v += x[aa] * rho[aa, bb]
                if v < best - 1e-15:
                    best = v
                    b = bb
        for k in range(A):
            d = rho[k, b] - rho[a, b]
            r_sum[k] += d
            R_sum[a, k] += d
            cum[k] += rho[k, b]
        for p in range(P):
            phi_sum[p] += rho[maps[p, a], b] - rho[a, b]
        if algo == 4:
            eta = 1.0 / math.sqrt((2.0 ** block) * A)
            x_ogd = simplex_project_kernel(x_ogd + eta * rho[:, b])
            in_block += 1
            if in_block == 2 ** block:
                block += 1
                in_block = 0
                x_ogd = np.full(A, 1.0 / A)
        while c < C and checkpoints[c] == m + 1:
            out_r[c] = r_sum
            out_R[c] = R_sum
            out_phi[c] = phi_sum
            c += 1
    return out_r, out_R, out_phi


@jit
def blackwell_episode_kernel(G, kind, lo, hi, center, radius, Amat, bvec, fallback,
                             nature, probs, expected, u, checkpoints):
    """Blackwell's strategy on a vector game; returns average payoffs at checkpoints.

    Adaptive Nature picks the action pushing the stage payoff furthest along
    the current outward direction ``avg - pi``.
    """
    A, B, d = G.shape
    n = u.shape[0]
    C = checkpoints.shape[0]
    total = np.zeros(d)
    out = np.zeros((C, d))
    c = 0
    for m in range(n):
        if m == 0:
            x = fallback.copy()
            pi = np.zeros(d)
            w = np.zeros(d)
        else:
            avg = total / m
            pi = project_encoded(kind, lo, hi, center, radius, Amat, bvec, avg)
            x = blackwell_mixed_kernel(G, avg, pi, fallback)
            w = avg - pi
        a = sample_kernel(x, u[m, 0])
        if nature == 0:
            b = sample_kernel(probs, u[m, 1])
        else:
            b = 0
            best = -np.inf
            for bb in range(B):
                v = 0.0
                for aa in range(A):
                    v += x[aa] * np.dot(G[aa, bb] - pi, w)
                if v > best + 1e-15:
                    best = v
                    b = bb
        if expected:
            for aa in range(A):
                total += x[aa] * G[aa, b]
        else:
            total += G[a, b]
        while c < C and checkpoints[c] == m + 1:
            out[c] = total / (m + 1)
            c += 1
    return out


@jit
def potential_episode_kernel(G, H, nature, probs, u, checkpoints):
    """Exponential-potential strategy for a box (transformed payoffs ``H``)."""
    A, B, d = G.shape
    D = H.shape[2]
    n = u.shape[0]
    C = checkpoints.shape[0]
    total = np.zeros(d)
    Gsum = np.zeros(D)
    block = 0
    in_block = 0
    out = np.zeros((C, d))
    c = 0
    for m in range(n):
        eta = math.sqrt(math.log(D) / 2.0 ** block)
        x = potential_mixed_kernel(H, Gsum, eta)
        a = sample_kernel(x, u[m, 0])
        if nature == 0:
            b = sample_kernel(probs, u[m, 1])
        else:
            s = eta * Gsum
            wts = np.exp(s - s.max())
            wts /= wts.sum()
            b = 0
            best = -np.inf
            for bb in range(B):
                v = 0.0
                for aa in range(A):
                    v += x[aa] * np.dot(wts, H[aa, bb])
                if v > best + 1e-15:
                    best = v
                    b = bb
        total += G[a, b]
        Gsum += H[a, b]
        in_block += 1
        if in_block == 2 ** block:
            block += 1
            in_block = 0
            Gsum[:] = 0.0
        while c < C and checkpoints[c] == m + 1:
            out[c] = total / (m + 1)
            c += 1
    return out


@jit
def calib_episode_kernel(points, nu, mask, n_outcomes, nature, probs, u, checkpoints):
    """Randomised grid forecaster; returns per-cell ``(N, S)`` snapshots.

    Adaptive Nature reports the outcome with the smallest expected forecast
    probability (ties to the lowest outcome).
    """
    L, d = points.shape
    n = u.shape[0]
    C = checkpoints.shape[0]
    N = np.zeros(L)
    S = np.zeros((L, d))
    outN = np.zeros((C, L))
    outS = np.zeros((C, L, d))
    c = 0
    for m in range(n):
        lam = calib_mixed_kernel(points, nu, mask, N, S, m)
        l = sample_kernel(lam, u[m, 0])
        if nature == 0:
            w = sample_kernel(probs, u[m, 1])
        else:
            mean = np.zeros(d)
            for k in range(L):
                mean += lam[k] * points[k]
            w = 0
            best = 1.0 - mean.sum()
            for j in range(d):
                if mean[j] < best - 1e-15:
                    best = mean[j]
                    w = j + 1
        N[l] += 1.0
        if w > 0:
            S[l, w - 1] += 1.0
        while c < C and checkpoints[c] == m + 1:
            outN[c] = N
            outS[c] = S
            c += 1
    return outN, outS


@jit
def selfplay2_kernel(rho1, rho2, algo1, algo2, u, checkpoints):
    """Two learners in self play; returns joint action counts at checkpoints."""
    A1, A2 = rho1.shape
    n = u.shape[0]
    C = checkpoints.shape[0]
    dummy1 = np.zeros((1, A1), dtype=np.int64)
    dummy2 = np.zeros((1, A2), dtype=np.int64)
    r1 = np.zeros(A1)
    R1 = np.zeros((A1, A1))
    c1 = np.zeros(A1)
    r2 = np.zeros(A2)
    R2 = np.zeros((A2, A2))
    c2 = np.zeros(A2)
    phi1 = np.zeros(1)
    phi2 = np.zeros(1)
    joint = np.zeros((A1, A2))
    out = np.zeros((C, A1, A2))
    c = 0
    for m in range(n):
        x1 = _mixed_regret_player(algo1, A1, r1, R1, phi1, c1, np.full(A1, 1.0 / A1), m, dummy1)
        x2 = _mixed_regret_player(algo2, A2, r2, R2, phi2, c2, np.full(A2, 1.0 / A2), m, dummy2)
        a = sample_kernel(x1, u[m, 0])
        b = sample_kernel(x2, u[m, 1])
        for k in range(A1):
            dlt = rho1[k, b] - rho1[a, b]
            r1[k] += dlt
            R1[a, k] += dlt
            c1[k] += rho1[k, b]
        for k in range(A2):
            dlt = rho2[a, k] - rho2[a, b]
            r2[k] += dlt
            R2[b, k] += dlt
            c2[k] += rho2[a, k]
        joint[a, b] += 1.0
        while c < C and checkpoints[c] == m + 1:
            out[c] = joint
            c += 1
    return out


def episode_uniforms(seed: int, n: int) -> np.ndarray:
    """The uniforms an episode with ``seed`` consumes, as an ``(n, 2)`` array."""
    return np.random.default_rng(seed).random((n, 2))


def checkpoint_array(checkpoints) -> np.ndarray:
    cp = np.asarray(sorted(set(int(c) for c in checkpoints)), dtype=np.int64)
    if cp.size == 0 or cp[0] < 1:
        raise ValueError("checkpoints must be positive stage numbers")
    return cp
