"""Self play between regret minimisers and equilibrium diagnostics.

Joint action distributions are probability tensors ``q`` of shape
``(A_1, ..., A_I)``.  Violations are computed from realized action counts,
so they describe the empirical distribution of play.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .calibration import calib_mixed_kernel
from .geometry import Grid
from .kernels import (
    ALGORITHMS,
    _mixed_regret_player,
    checkpoint_array,
    sample_kernel,
    selfplay2_kernel,
)
from .zerosum import exploitability, solve

SELFPLAY_ALGORITHMS = ("regret_matching", "exp_weights", "internal")


class NPlayerGame:
    """Finite game with payoff tensors ``payoffs[i]`` of shape ``(A_1, ..., A_I)``."""

    def __init__(self, payoffs: Sequence):
        tensors = [np.asarray(p, dtype=float) for p in payoffs]
        if not tensors:
            raise ValueError("a game needs at least one player")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise ValueError("payoff tensors need one axis per player")
        for p in tensors:
            if p.shape != shape:
                raise ValueError("payoff tensors have inconsistent shapes")
            if not np.all(np.isfinite(p)):
                raise ValueError("payoffs must be finite")
        if min(shape) < 1:
            raise ValueError("every player needs at least one action")
        self.payoffs = tensors

    @property
    def n_players(self) -> int:
        return len(self.payoffs)

    @property
    def shape(self):
        return self.payoffs[0].shape

    @classmethod
    def two_player(cls, rho1, rho2) -> "NPlayerGame":
        return cls([rho1, rho2])

    @classmethod
    def zero_sum(cls, rho) -> "NPlayerGame":
        rho = np.asarray(rho, dtype=float)
        return cls([rho, -rho])

    def is_zero_sum(self, tol: float = 1e-12) -> bool:
        return self.n_players == 2 and np.allclose(self.payoffs[0], -self.payoffs[1],
                                                   rtol=0.0, atol=tol)


def as_joint(game: NPlayerGame, q, tol: float = 1e-9) -> np.ndarray:
    """Validate a joint distribution over action profiles."""
    q = np.asarray(q, dtype=float)
    if q.shape != game.shape:
        raise ValueError(f"joint distribution has shape {q.shape}, expected {game.shape}")
    if np.any(q < -tol) or abs(q.sum() - 1.0) > tol:
        raise ValueError("joint distribution must be nonnegative and sum to 1")
    return q


def _player_view(t: np.ndarray, i: int) -> np.ndarray:
    # Player i's axis first, every other player flattened.
    return np.moveaxis(t, i, 0).reshape(t.shape[i], -1)


def deviation_payoffs(game: NPlayerGame, q, i: int) -> np.ndarray:
    """``rho_i(a*, q_{-i})`` for every action ``a*`` of player ``i``."""
    q = as_joint(game, q)
    others = _player_view(q, i).sum(axis=0)
    return _player_view(game.payoffs[i], i) @ others


def hannan_violation(game: NPlayerGame, q) -> np.ndarray:
    """Per player ``max_a* rho_i(a*, q_{-i}) - rho_i(q)``; ``q`` is in the Hannan set iff ``<= 0``."""
    q = as_joint(game, q)
    out = np.empty(game.n_players)
    for i in range(game.n_players):
        out[i] = deviation_payoffs(game, q, i).max() - float((game.payoffs[i] * q).sum())
    return out


def deviation_gains(game: NPlayerGame, q, i: int) -> np.ndarray:
    """``gain[a, a']``: q-weighted gain of player ``i`` switching from ``a`` to ``a'``."""
    q = as_joint(game, q)
    Q = _player_view(q, i)
    R = _player_view(game.payoffs[i], i)
    cross = Q @ R.T
    return cross - np.diag(cross)[:, None]


def correlated_violation(game: NPlayerGame, q) -> np.ndarray:
    """Per player largest conditional deviation gain (``>= 0``; zero at a correlated equilibrium)."""
    q = as_joint(game, q)
    return np.array([deviation_gains(game, q, i).max() for i in range(game.n_players)])


# ---------------------------------------------------------------------------
# self play


def power_of_two_stages(n: int) -> np.ndarray:
    """``1, 2, 4, ...`` up to ``n``, with ``n`` itself appended as the final stage."""
    if n < 1:
        return np.zeros(0, dtype=np.int64)
    stages = [1 << k for k in range(n.bit_length()) if (1 << k) <= n]
    if stages[-1] != n:
        stages.append(n)
    return np.asarray(stages, dtype=np.int64)


@dataclass
class SelfplayResult:
    """Empirical joint distributions and violations at each recorded stage."""

    game: NPlayerGame
    algorithms: List[str]
    seed: int
    stages: np.ndarray
    joints: np.ndarray          # (C, A_1, ..., A_I) empirical distributions
    hannan: np.ndarray          # (C, I)
    correlated: np.ndarray      # (C, I)
    actions: Optional[np.ndarray] = None   # (n, I) realized profiles, Python path only

    @property
    def joint(self) -> np.ndarray:
        return self.joints[-1]

    @property
    def n(self) -> int:
        return int(self.stages[-1]) if self.stages.size else 0


def _check_algorithms(game: NPlayerGame, algorithms) -> List[str]:
    if isinstance(algorithms, str):
        algorithms = [algorithms] * game.n_players
    algorithms = list(algorithms)
    if len(algorithms) != game.n_players:
        raise ValueError("one algorithm per player is required")
    for a in algorithms:
        if a not in SELFPLAY_ALGORITHMS:
            raise ValueError(f"unknown self-play algorithm {a!r}")
    return algorithms


def _selfplay_python(game: NPlayerGame, codes, u, stages):
    I = game.n_players
    shape = game.shape
    n = u.shape[0]
    r = [np.zeros(A) for A in shape]
    R = [np.zeros((A, A)) for A in shape]
    cum = [np.zeros(A) for A in shape]
    dummy_maps = np.zeros((1, 1), dtype=np.int64)
    dummy_phi = np.zeros(1)
    counts = np.zeros(shape)
    actions = np.zeros((n, I), dtype=np.int64)
    snaps = np.zeros((stages.size,) + shape)
    c = 0
    for m in range(n):
        profile = []
        for i in range(I):
            x = _mixed_regret_player(codes[i], shape[i], r[i], R[i], dummy_phi, cum[i],
                                     np.full(shape[i], 1.0 / shape[i]), m, dummy_maps)
            profile.append(sample_kernel(x, u[m, i]))
        profile = tuple(profile)
        for i in range(I):
            idx = list(profile)
            idx[i] = slice(None)
            U = game.payoffs[i][tuple(idx)]
            a = profile[i]
            delta = U - U[a]
            r[i] += delta
            R[i][a] += delta
            cum[i] += U
        counts[profile] += 1.0
        actions[m] = profile
        while c < stages.size and stages[c] == m + 1:
            snaps[c] = counts
            c += 1
    return snaps, actions


def selfplay(game: NPlayerGame, algorithms, n: int, seed: int = 0,
             stages=None, use_kernel: Optional[bool] = None) -> SelfplayResult:
    """Every player runs its own regret minimiser against the others' realized actions.

    Player ``i`` observes the outcome vector ``U_i(a) = rho_i(a, a_{-i})`` each
    stage.  Stage ``m`` of player ``i`` consumes uniform ``u[m, i]`` of
    ``default_rng(seed).random((n, I))``.  Violations are recorded at
    ``stages`` (default: powers of two and ``n``).

    Args:
        game: The game.
        algorithms: One of ``regret_matching``, ``exp_weights``, ``internal``
            per player, or a single name for everyone.
        n: Number of stages.
        seed: Episode seed.
        stages: Stages at which to record the empirical joint distribution.
        use_kernel: Use the compiled two-player loop (default for two
            players).  The Python loop also returns the action profiles.
    """
    algorithms = _check_algorithms(game, algorithms)
    if n < 0:
        raise ValueError("n must be nonnegative")
    stages = power_of_two_stages(n) if stages is None else checkpoint_array(stages)
    if stages.size and stages[-1] > n:
        raise ValueError("recording stages exceed n")
    codes = [ALGORITHMS[a] for a in algorithms]
    I = game.n_players
    u = np.random.default_rng(seed).random((n, I))
    if use_kernel is None:
        use_kernel = I == 2
    actions = None
    if use_kernel and I == 2 and stages.size:
        snaps = selfplay2_kernel(game.payoffs[0], game.payoffs[1], codes[0], codes[1], u, stages)
    elif stages.size:
        snaps, actions = _selfplay_python(game, codes, u, stages)
    else:
        snaps = np.zeros((0,) + game.shape)
    joints = snaps / stages.reshape((-1,) + (1,) * I) if stages.size else snaps
    hannan = np.array([hannan_violation(game, q) for q in joints]).reshape(-1, I)
    corr = np.array([correlated_violation(game, q) for q in joints]).reshape(-1, I)
    return SelfplayResult(game, algorithms, seed, stages, joints, hannan, corr, actions)


def external_regret_from_actions(game: NPlayerGame, actions, i: int) -> np.ndarray:
    """Average external regret vector ``r_n`` of player ``i`` from realized profiles."""
    actions = np.asarray(actions, dtype=np.int64)
    n = actions.shape[0]
    r = np.zeros(game.shape[i])
    for profile in actions:
        idx = list(profile)
        idx[i] = slice(None)
        U = game.payoffs[i][tuple(idx)]
        r += U - U[profile[i]]
    return r / max(n, 1)


# ---------------------------------------------------------------------------
# zero-sum games


@dataclass
class ZeroSumReport:
    value: float
    row_exploitability: np.ndarray   # per recorded stage
    col_exploitability: np.ndarray
    value_gap: np.ndarray            # |average payoff - value|


def zerosum_optimality(game: NPlayerGame, result) -> ZeroSumReport:
    """Exploitability of the empirical marginals and the value gap of a self-play run.

    ``result`` is a :class:`SelfplayResult` or a single joint distribution.
    """
    if not game.is_zero_sum():
        raise ValueError("zerosum_optimality needs a two-player game with rho_2 = -rho_1")
    rho = game.payoffs[0]
    joints = result.joints if isinstance(result, SelfplayResult) else as_joint(game, result)[None]
    v = solve(rho)[0]
    row = np.empty(len(joints))
    col = np.empty(len(joints))
    gap = np.empty(len(joints))
    for k, q in enumerate(joints):
        row[k], col[k] = exploitability(rho, q.sum(axis=1), q.sum(axis=0))
        gap[k] = abs(float((rho * q).sum()) - v)
    return ZeroSumReport(v, row, col, gap)


# ---------------------------------------------------------------------------
# calibrated best response for non-linear evaluations


def two_phase_nature(N: int) -> Callable[[int, np.ndarray], float]:
    """Nature plays ``b = 0`` for ``N`` stages and ``b = 1`` afterwards."""
    def nature(m, past):
        return 0.0 if m < N else 1.0
    return nature


def _covering_radius(points: np.ndarray, spacing: float) -> float:
    # Largest distance from a lattice point of [0, 1]^k to the grid.
    k = points.shape[1]
    if k == 1:
        p = np.sort(np.clip(points[:, 0], 0.0, 1.0))
        gaps = np.r_[p[0], (p[1:] - p[:-1]) / 2.0, 1.0 - p[-1]]
        return float(gaps.max())
    m = int(np.ceil(1.0 / spacing))
    axes = [np.linspace(0.0, 1.0, m + 1)] * k
    probe = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    d2 = ((probe[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.min(axis=1)).max())


@dataclass
class CalibratedBRResult:
    stages: np.ndarray
    internal_score: np.ndarray    # sup over cells of the (L, eps)-internal regret
    external_regret: np.ndarray   # sup_a G(a, mean b) - G(mean a, mean b)
    cells: np.ndarray
    nature_actions: np.ndarray
    cell_actions: np.ndarray


def calibrated_best_response(G: Callable, grid, n: int, seed: int, eps: float, delta: float,
                             nature: Callable[[int, np.ndarray], float],
                             actions=None, stages=None) -> CalibratedBRResult:
    """Best respond to a calibrated forecast of Nature's action.

    A randomised grid forecaster predicts Nature's action ``b`` in
    ``[0, 1]^k`` from ``grid``; when it predicts ``b[l]`` the player uses the
    precomputed ``a[l] in argmax_a G(a, b[l])``.  The caller declares
    ``delta`` such that points within ``delta`` change ``G`` by at most
    ``eps / 2``; the grid must then cover ``[0, 1]^k`` within ``delta / 2``.

    Args:
        G: Evaluation ``G(a, b)`` returning a float.
        grid: :class:`Grid` or array of points ``(L, k)`` in ``[0, 1]^k``.
        n: Number of stages.
        seed: Seed of the forecaster's uniforms ``default_rng(seed).random(n)``.
        eps: Slack of the internal regret.
        delta: Declared modulus of continuity for ``eps``.
        nature: ``nature(m, past_b)`` returns Nature's action at stage ``m``.
        actions: Candidate actions to maximise over (default: 201 points of [0, 1]).
        stages: Stages at which scores are recorded (default: powers of two and ``n``).
    """
    points = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    L, k = points.shape
    radius = _covering_radius(points, delta / 8.0)
    if radius > delta / 2.0 + 1e-12:
        raise ValueError(f"grid covers [0, 1]^{k} only within {radius:.4g} > delta / 2")
    cand = np.linspace(0.0, 1.0, 201) if actions is None else np.asarray(actions, dtype=float)
    stages = power_of_two_stages(n) if stages is None else checkpoint_array(stages)

    def table(bs):
        return np.array([[G(a, b) for b in bs] for a in cand])

    def point(b):
        return b[0] if k == 1 else b

    best_idx = table([point(p) for p in points]).argmax(axis=0)
    cell_actions = cand[best_idx]

    u = np.random.default_rng(seed).random(n)
    nu = np.zeros(L)
    mask = np.ones((L, L), dtype=np.bool_)
    N = np.zeros(L)
    S = np.zeros((L, k))
    cells = np.zeros(n, dtype=np.int64)
    bs = np.zeros((n, k))
    a_sum = np.zeros_like(np.atleast_1d(cand[0]), dtype=float)
    internal = np.zeros(stages.size)
    external = np.zeros(stages.size)
    c = 0
    for m in range(n):
        lam = calib_mixed_kernel(points, nu, mask, N, S, m)
        l = sample_kernel(lam, u[m])
        b = np.atleast_1d(np.asarray(nature(m, bs[:m]), dtype=float))
        cells[m] = l
        bs[m] = b
        N[l] += 1.0
        S[l] += b
        a_sum = a_sum + cell_actions[l]
        while c < stages.size and stages[c] == m + 1:
            live = np.nonzero(N)[0]
            means = S[live] / N[live, None]
            T = table([point(x) for x in means])
            gaps = T.max(axis=0) - T[best_idx[live], np.arange(live.size)] - eps
            internal[c] = float((N[live] / (m + 1) * gaps).max())
            b_bar = point(bs[:m + 1].mean(axis=0))
            a_bar = a_sum / (m + 1)
            a_bar = a_bar[0] if a_bar.size == 1 and np.ndim(cand[0]) == 0 else a_bar
            external[c] = max(G(a, b_bar) for a in cand) - G(a_bar, b_bar)
            c += 1
    return CalibratedBRResult(stages, internal, external, cells, bs, cell_actions)
