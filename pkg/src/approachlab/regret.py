"""No-regret procedures: external, internal and swap-family (Phi) regret.

Payoffs are scalar ``rho[a, b]`` in ``[0, 1]``; the outcome vector of a stage
is ``U = rho[:, b]``.  Regret statistics are stored as running sums in a
:class:`RegretState`; averages divide by ``n``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._jit import jit
from .engine import History, Strategy, VectorGame
from .geometry import HalfspaceIntersection, simplex_project_kernel
from .invariant import invariant_measure, stationary
from .zerosum import row_minimizer_kernel

# ---------------------------------------------------------------------------
# swap families


class SwapFamily:
    """Finite family of maps ``phi : A -> A`` stored as an int array ``(|Phi|, A)``."""

    def __init__(self, maps):
        m = np.atleast_2d(np.asarray(maps, dtype=np.int64))
        if m.size == 0:
            raise ValueError("swap family must contain at least one map")
        A = m.shape[1]
        if m.min() < 0 or m.max() >= A:
            raise ValueError("maps must send actions to actions")
        self.maps = m

    @property
    def n_actions(self) -> int:
        return self.maps.shape[1]

    def __len__(self):
        return self.maps.shape[0]

    def moved(self) -> int:
        """``A_Phi``: the largest number of maps that move a single action."""
        A = self.n_actions
        return int(max((self.maps[:, a] != a).sum() for a in range(A)))

    def transfer_matrix(self) -> np.ndarray:
        """``H[phi, a, a']`` is 1 when ``phi(a) = a'`` and ``a' != a``."""
        P, A = self.maps.shape
        H = np.zeros((P, A, A))
        for p in range(P):
            for a in range(A):
                if self.maps[p, a] != a:
                    H[p, a, self.maps[p, a]] = 1.0
        return H

    @classmethod
    def external(cls, A: int) -> "SwapFamily":
        """Constant maps, one per action."""
        return cls(np.repeat(np.arange(A)[:, None], A, axis=1))

    @classmethod
    def internal(cls, A: int) -> "SwapFamily":
        """Maps sending one action ``a'`` to ``a* != a'`` and fixing the rest."""
        rows = []
        for src, dst in itertools.permutations(range(A), 2):
            m = np.arange(A)
            m[src] = dst
            rows.append(m)
        return cls(np.array(rows).reshape(-1, A))

    @classmethod
    def swap(cls, A: int) -> "SwapFamily":
        """All ``A^A`` maps."""
        return cls(np.array(list(itertools.product(range(A), repeat=A))))


# ---------------------------------------------------------------------------
# regret statistics


@dataclass
class RegretState:
    """Running regret sums for one player with ``A`` actions."""

    A: int
    family: Optional[SwapFamily] = None

    def __post_init__(self):
        self.n = 0
        self.r_sum = np.zeros(self.A)
        self.R_sum = np.zeros((self.A, self.A))
        self.phi_sum = np.zeros(len(self.family) if self.family is not None else 0)
        self.payoff_sum = np.zeros(self.A)

    @property
    def r_avg(self):
        return self.r_sum / max(self.n, 1)

    @property
    def R_avg(self):
        return self.R_sum / max(self.n, 1)

    @property
    def phi_avg(self):
        return self.phi_sum / max(self.n, 1)


def update_regret(state: RegretState, a: int, U) -> RegretState:
    """Record a stage where action ``a`` met outcome vector ``U``."""
    U = np.asarray(U, dtype=float)
    if U.shape != (state.A,):
        raise ValueError("outcome vector has the wrong length")
    if not 0 <= a < state.A:
        raise ValueError("action out of range")
    state.r_sum += U - U[a]
    state.R_sum[a] += U - U[a]
    if state.family is not None:
        state.phi_sum += U[state.family.maps[:, a]] - U[a]
    state.payoff_sum += U
    state.n += 1
    return state


def expected_external_increment(x, U) -> np.ndarray:
    """``E_x r(a, U) = U - <x, U>``."""
    x = np.asarray(x, dtype=float)
    U = np.asarray(U, dtype=float)
    return U - x @ U


def expected_internal_increment(x, U) -> np.ndarray:
    """``E_x R(a, U)``: row ``a`` is ``x_a (U - U_a)``."""
    x = np.asarray(x, dtype=float)
    U = np.asarray(U, dtype=float)
    return x[:, None] * (U[None, :] - U[:, None])


# ---------------------------------------------------------------------------
# external regret


@jit
def regret_matching_kernel(r):
    A = r.shape[0]
    pos = np.maximum(r, 0.0)
    s = pos.sum()
    if s <= 0.0:
        return np.full(A, 1.0 / A)
    return pos / s


def regret_matching_step(state: RegretState) -> np.ndarray:
    """Play proportionally to positive average regrets (uniform if none)."""
    return regret_matching_kernel(state.r_sum.astype(float))


def exp_weights_eta(n: int, A: int) -> float:
    """Rate ``sqrt(8 n log A)`` applied to average payoffs."""
    return math.sqrt(8.0 * n * math.log(A))


@jit
def softmax_kernel(s):
    e = np.exp(s - s.max())
    return e / e.sum()


def exp_weights_step(avg_payoff, n: int, eta: Optional[float] = None) -> np.ndarray:
    """Exponential weights ``x_a ∝ exp(eta * avg_payoff[a])``.

    With ``eta=None`` the anytime rate :func:`exp_weights_eta` is used, which
    equals ``sqrt(8 log A / n)`` applied to cumulative payoffs.
    """
    v = np.asarray(avg_payoff, dtype=float)
    if eta is None:
        eta = exp_weights_eta(n, v.shape[0])
    return softmax_kernel(eta * v)


def ogd_step(x, U, eta: float) -> np.ndarray:
    """Projected gradient ascent step on the linear payoff ``<x, U>``."""
    return simplex_project_kernel(np.asarray(x, dtype=float) + eta * np.asarray(U, dtype=float))


# ---------------------------------------------------------------------------
# internal and Phi regret


@jit
def theta_kernel(M, maps):
    P, A = maps.shape
    T = np.zeros((A, A))
    for p in range(P):
        for a in range(A):
            T[a, maps[p, a]] += M[p]
    return T


def theta_matrix(M, family: SwapFamily) -> np.ndarray:
    """``Theta[a, a'] = sum of M[phi]`` over maps with ``phi(a) = a'``."""
    M = np.asarray(M, dtype=float)
    if M.shape != (len(family),):
        raise ValueError("one weight per map is required")
    return theta_kernel(M, family.maps)


def invariant_step(M) -> np.ndarray:
    """Mixed action that is an invariant measure of the nonnegative matrix ``M``."""
    return invariant_measure(M)


def internal_regret_step(state: RegretState) -> np.ndarray:
    return invariant_measure(np.maximum(state.R_avg, 0.0))


def phi_regret_step(state: RegretState) -> np.ndarray:
    """Invariant measure of ``Theta`` built from positive Phi-regrets."""
    T = theta_matrix(np.maximum(state.phi_avg, 0.0), state.family)
    np.fill_diagonal(T, 0.0)
    return invariant_measure(T)


def ext_to_phi_step(theta, family: SwapFamily) -> np.ndarray:
    """Turn a distribution over maps into a mixed action.

    Returns the canonical fixed point ``p = S p`` of the column-stochastic
    ``S[a, a'] = sum of theta[phi]`` over maps with ``phi(a') = a``.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(family),) or np.any(theta < 0) or theta.sum() <= 0:
        raise ValueError("theta must be a distribution over the family")
    P = theta_kernel(theta / theta.sum(), family.maps)  # row-stochastic, P = S^T
    return stationary(P)


def regret_matching_over(values) -> np.ndarray:
    """Regret matching on an arbitrary regret vector (uniform if none positive)."""
    return regret_matching_kernel(np.asarray(values, dtype=float))


# ---------------------------------------------------------------------------
# lifted game for sup-norm external regret


def linf_regret_lift(rho):
    """Lift ``rho`` (A x B) to ``g(a, b) = (rho[a, b], rho[:, b])`` and its target.

    The target is ``{(z, V) in [0, 1]^{A+1} : z >= V_a for all a}``.  Its
    distance is sandwiched by ``||r⁺||_inf / sqrt(2) <= d <= ||r⁺||_inf``.
    """
    rho = np.asarray(rho, dtype=float)
    A, B = rho.shape
    g = np.empty((A, B, A + 1))
    g[:, :, 0] = rho
    g[:, :, 1:] = rho.T[None, :, :]
    rows = []
    for a in range(A):
        r = np.zeros(A + 1)
        r[0] = -1.0
        r[1 + a] = 1.0
        rows.append(r)
    eye = np.eye(A + 1)
    Amat = np.vstack([rows, eye, -eye])
    b = np.r_[np.zeros(A), np.ones(A + 1), np.zeros(A + 1)]
    witness = np.r_[1.0, np.zeros(A)]
    return VectorGame(g), HalfspaceIntersection(Amat, b, witness)


def positive_regret_linf(lifted_avg) -> float:
    """``||r⁺||_inf`` read from a lifted average ``(z, V)``."""
    z = np.asarray(lifted_avg, dtype=float)
    return float(max(z[1:].max() - z[0], 0.0))


# ---------------------------------------------------------------------------
# approachability driven by a direction learner


@dataclass
class DirectionState:
    """Unit-ball direction ``theta`` learnt by projected gradient ascent."""

    dim: int
    scale: float = 1.0

    def __post_init__(self):
        self.theta = np.zeros(self.dim)
        self.m = 0

    def update(self, g) -> None:
        self.m += 1
        eta = 1.0 / (self.scale * math.sqrt(self.m))
        th = self.theta + eta * np.asarray(g, dtype=float)
        nrm = np.linalg.norm(th)
        self.theta = th / nrm if nrm > 1.0 else th


@jit
def direction_mixed_kernel(G, theta):
    A, B, d = G.shape
    M = np.empty((A, B))
    for a in range(A):
        for b in range(B):
            s = 0.0
            for k in range(d):
                s += theta[k] * G[a, b, k]
            M[a, b] = s
    return row_minimizer_kernel(M)


def regret_driven_approach_step(state: DirectionState, game: VectorGame) -> np.ndarray:
    """Play a minimiser of ``max_b <theta, g(x, b)>`` (uniform while ``theta = 0``)."""
    if np.linalg.norm(state.theta) <= 1e-12:
        return np.full(game.n_actions, 1.0 / game.n_actions)
    return direction_mixed_kernel(game.payoffs, state.theta)


class DirectionApproachStrategy(Strategy):
    """Approach ``{0}`` by playing against a no-regret learner of directions."""

    def __init__(self, game: VectorGame):
        self.state = DirectionState(game.dim, max(game.norm_inf(), 1e-12))

    def reset(self, game):
        self.state = DirectionState(game.dim, max(game.norm_inf(), 1e-12))

    def next(self, history):
        return regret_driven_approach_step(self.state, history.game)

    def observe(self, history):
        self.state.update(history.last_payoff)


# ---------------------------------------------------------------------------
# engine strategies on the external-regret vector game


def external_regret_game(rho) -> VectorGame:
    """Vector game ``r(a, b) = rho[:, b] - rho[a, b]`` whose target is the negative orthant."""
    rho = np.asarray(rho, dtype=float)
    return VectorGame(rho.T[None, :, :] - rho[:, :, None])


def internal_regret_game(rho) -> VectorGame:
    """Vector game of flattened internal regret matrices ``R(a, b)``."""
    rho = np.asarray(rho, dtype=float)
    A, B = rho.shape
    g = np.zeros((A, B, A * A))
    for a in range(A):
        for b in range(B):
            R = np.zeros((A, A))
            R[a] = rho[:, b] - rho[a, b]
            g[a, b] = R.ravel()
    return VectorGame(g)


class _RegretPlayer(Strategy):
    """Keeps a :class:`RegretState` in sync with the engine history."""

    def __init__(self, rho, family: Optional[SwapFamily] = None):
        self.rho = np.asarray(rho, dtype=float)
        self.family = family
        self.state = RegretState(self.rho.shape[0], family)

    def reset(self, game):
        self.state = RegretState(self.rho.shape[0], self.family)

    def observe(self, history: History):
        U = self.rho[:, history.last_nature]
        if history.last_action >= 0:
            update_regret(self.state, history.last_action, U)
        else:
            x = history.last_mixed
            self.state.r_sum += expected_external_increment(x, U)
            self.state.R_sum += expected_internal_increment(x, U)
            if self.family is not None:
                self.state.phi_sum += U[self.family.maps] @ x - x @ U
            self.state.payoff_sum += U
            self.state.n += 1


class RegretMatchingPlayer(_RegretPlayer):
    def next(self, history):
        return regret_matching_step(self.state)


class ExpWeightsPlayer(_RegretPlayer):
    def next(self, history):
        A = self.rho.shape[0]
        if self.state.n == 0:
            return np.full(A, 1.0 / A)
        return exp_weights_step(self.state.payoff_sum / self.state.n, self.state.n)


class InternalRegretPlayer(_RegretPlayer):
    def next(self, history):
        return internal_regret_step(self.state)


class PhiRegretPlayer(_RegretPlayer):
    def next(self, history):
        return phi_regret_step(self.state)


class OGDPlayer(Strategy):
    """Projected gradient ascent with doubling restarts, ``eta = 1/sqrt(2^k A)``."""

    def __init__(self, rho):
        self.rho = np.asarray(rho, dtype=float)

    def reset(self, game):
        A = self.rho.shape[0]
        self.x = np.full(A, 1.0 / A)
        self.block, self.in_block = 0, 0

    def next(self, history):
        return self.x

    def observe(self, history):
        A = self.rho.shape[0]
        U = self.rho[:, history.last_nature]
        eta = 1.0 / math.sqrt(2 ** self.block * A)
        self.x = ogd_step(self.x, U, eta)
        self.in_block += 1
        if self.in_block == 2 ** self.block:
            self.block += 1
            self.in_block = 0
            self.x = np.full(A, 1.0 / A)


# ---------------------------------------------------------------------------
# bounds


def rm_bound(A: int, n):
    """Regret matching: ``E ||r⁺||_2 <= sqrt(A / n)``."""
    return np.sqrt(A / np.asarray(n, dtype=float))


def ew_bound(A: int, n):
    """Exponential weights: ``E ||r⁺||_inf <= 2 sqrt(log A / n)``."""
    return 2.0 * np.sqrt(math.log(A) / np.asarray(n, dtype=float))


def phi_bound(family: SwapFamily, n):
    """``E ||R^Phi⁺||_2 <= sqrt(A_Phi / n)``."""
    return np.sqrt(family.moved() / np.asarray(n, dtype=float))
