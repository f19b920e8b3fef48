"""Approachability of convex targets in repeated vector-payoff games.

Contents: a grid-based approachability checker, Blackwell's projection
strategy, the exponential-potential strategy for sup-norm approachability of
boxes, the ratio lifts used for weighted and partially active stages, and the
two-phase weak-approachability demonstration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._jit import jit
from .engine import History, Nature, Strategy, VectorGame, run_episode
from .errors import NumericalError
from .geometry import Box, ConeLift, ConvexTarget, HalfspaceIntersection
from .zerosum import row_minimizer_kernel, solve

PROJECTED_GAME_EPS = 1e-9
AT_TARGET_TOL = 1e-9


# ---------------------------------------------------------------------------
# restriction to the convex hull of payoffs


def hull_halfspaces(game: VectorGame):
    """``(A, b)`` with ``co{g(a, b)} = {z : A z <= b}``, or ``None`` if degenerate."""
    pts = game.payoffs.reshape(-1, game.dim)
    if game.dim == 1:
        lo, hi = pts.min(), pts.max()
        return np.array([[1.0], [-1.0]]), np.array([hi, -lo])
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(pts)
    except (QhullError, ValueError):
        return None
    eq = hull.equations
    return eq[:, :-1], -eq[:, -1]


def _chebyshev_point(A, b):
    from scipy.optimize import linprog

    norms = np.linalg.norm(A, axis=1)
    d = A.shape[1]
    res = linprog(np.r_[np.zeros(d), -1.0], A_ub=np.c_[A, norms], b_ub=b,
                  bounds=[(None, None)] * d + [(0, None)], method="highs")
    if res.status != 0:
        return None, -1.0
    return res.x[:d], res.x[d]


def restrict_to_hull(game: VectorGame, target: ConvexTarget) -> ConvexTarget:
    """The polyhedral target intersected with the convex hull of the payoffs.

    Raises ``ValueError`` for non-polyhedral targets or an empty intersection.
    """
    A1, b1 = target.halfspaces()
    hull = hull_halfspaces(game)
    if hull is None:
        raise ValueError("payoff vectors do not span a full-dimensional hull")
    A = np.vstack([A1, hull[0]])
    b = np.concatenate([b1, hull[1]])
    w, r = _chebyshev_point(A, b)
    if w is None:
        raise ValueError("target does not meet the convex hull of the payoffs")
    return HalfspaceIntersection(A, b, w)


def hull_target_norm(game: VectorGame, target: ConvexTarget) -> float:
    """Upper bound on ``sup ||z||`` over target points inside the payoff hull.

    Exact (vertex enumeration) for polyhedral targets with a full-dimensional
    intersection; otherwise the smaller of ``||g||_inf`` and the target's own
    norm bound.  Never an underestimate.
    """
    bound = min(game.norm_inf(), target.norm_bound())
    try:
        A1, b1 = target.halfspaces()
    except TypeError:
        return bound
    hull = hull_halfspaces(game)
    if hull is None:
        return bound
    A = np.vstack([A1, hull[0]])
    b = np.concatenate([b1, hull[1]])
    w, r = _chebyshev_point(A, b)
    if w is None or r <= 1e-9:
        return bound
    if game.dim == 1:
        a = A[:, 0]
        lo = np.max(b[a < 0] / a[a < 0])
        hi = np.min(b[a > 0] / a[a > 0])
        return float(min(bound, max(abs(lo), abs(hi))))
    from scipy.spatial import HalfspaceIntersection as _HI

    try:
        verts = _HI(np.c_[A, -b], w).intersections
    except Exception:
        return bound
    return float(min(bound, np.linalg.norm(verts, axis=1).max()))


# ---------------------------------------------------------------------------
# approachability check


class ApproachabilityCheck(NamedTuple):
    delta_hat: float
    witness_y: np.ndarray


def _simplex_grid(B: int, resolution: int) -> np.ndarray:
    rows = []
    for c in itertools.combinations(range(resolution + B - 1), B - 1):
        parts = np.diff(np.r_[-1, c, resolution + B - 1]) - 1
        rows.append(parts / resolution)
    return np.array(rows, dtype=float)


def _project_rows(target: ConvexTarget, Z: np.ndarray) -> np.ndarray:
    if hasattr(target, "project_many"):
        return target.project_many(Z)[0]
    return np.array([target.project(z)[0] for z in Z])


def _batch_simplex_project(V: np.ndarray) -> np.ndarray:
    n = V.shape[1]
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, n + 1)
    cond = U - css / idx > 0
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(V.shape[0]), rho] / (rho + 1)
    return np.maximum(V - theta[:, None], 0.0)


def inner_distance_min(game: VectorGame, target: ConvexTarget, Y: np.ndarray,
                       tol: float = 1e-6, max_iter: int = 50_000):
    """``min_x d(g(x, y), target)`` for each row ``y`` of ``Y``.

    Accelerated projected gradient on ``0.5 d^2`` over the simplex, stopped
    once a Frank-Wolfe gap certifies the distance to within ``tol``.
    """
    G = np.einsum("pb,abk->pka", Y, game.payoffs)  # (P, d, A)
    P, d, A = G.shape
    L = np.maximum(np.linalg.norm(G, ord=2, axis=(1, 2)) ** 2, 1e-12)
    x = np.full((P, A), 1.0 / A)
    z = x.copy()
    t = 1.0
    active = np.ones(P, dtype=bool)
    dist = np.full(P, np.inf)
    for it in range(max_iter):
        pts = np.einsum("pka,pa->pk", G, x)
        proj = _project_rows(target, pts)
        res = pts - proj
        dist = np.linalg.norm(res, axis=1)
        grad = np.einsum("pka,pk->pa", G, res)
        gap = np.einsum("pa,pa->p", grad, x) - grad.min(axis=1)
        gap = np.maximum(gap, 0.0)
        err = np.minimum(np.sqrt(2 * gap), 2 * gap / np.maximum(dist, 1e-300))
        active = (err > tol) & (dist > tol)
        if not active.any():
            return dist
        ptsz = np.einsum("pka,pa->pk", G, z)
        resz = ptsz - _project_rows(target, ptsz)
        gz = np.einsum("pka,pk->pa", G, resz)
        xn = _batch_simplex_project(z - gz / L[:, None])
        tn = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        z = xn + ((t - 1) / tn) * (xn - x)
        x = np.where(active[:, None], xn, x)
        t = tn
        if it % 200 == 199:
            t = 1.0  # restart keeps the monotone regime
            z = x.copy()
    # Slow convergence happens when the minimum distance is zero on a
    # degenerate face.  For polyhedral targets the zero case is decided
    # exactly: g(x, y) in {A z <= b} for some x iff the matrix game
    # M[a, i] = A_i g(a, y) - b_i has min-max value <= 0.
    try:
        Ah, bh = target.halfspaces()
    except TypeError:
        Ah = None
    if Ah is not None:
        scale = np.linalg.norm(Ah, axis=1).min()
        for p in np.flatnonzero(active):
            M = G[p].T @ Ah.T - bh[None, :]
            v = -solve(-M)[0]
            if v <= tol * scale:
                dist[p] = 0.0
                active[p] = False
        if not active.any():
            return dist
    raise NumericalError("inner approachability minimisation did not converge",
                         float(err[active].max()))


def check_approachable(game: VectorGame, target: ConvexTarget,
                       resolution: int = 20) -> ApproachabilityCheck:
    """Grid estimate of ``max_y min_x d(g(x, y), target)`` (Nature has ``B <= 4``).

    A target is reported approachable when ``delta_hat <= 1e-6``.  The true
    value can exceed ``delta_hat`` by at most :func:`grid_slack`.
    """
    B = game.n_nature
    if B > 4:
        raise ValueError("grid check supports at most 4 Nature actions")
    Y = _simplex_grid(B, resolution)
    vals = inner_distance_min(game, target, Y)
    i = int(np.argmax(vals))
    return ApproachabilityCheck(float(vals[i]), Y[i])


def grid_slack(game: VectorGame, resolution: int = 20) -> float:
    """Lipschitz bound on how far the grid maximum can be below the true maximum."""
    return game.norm_inf() * game.n_nature / resolution


# ---------------------------------------------------------------------------
# Blackwell's strategy


@jit
def blackwell_mixed_kernel(G, avg, pi, fallback):
    """Minimiser over ``x`` of ``max_b <g(x, b) - pi, avg - pi>``; ``fallback`` at the target."""
    A, B, d = G.shape
    w = avg - pi
    if math.sqrt(np.dot(w, w)) <= 1e-9:
        return fallback.copy()
    M = np.empty((A, B))
    for a in range(A):
        for b in range(B):
            M[a, b] = np.dot(G[a, b] - pi, w)
    return row_minimizer_kernel(M)


@dataclass
class ApproachConfig:
    """Blackwell setup: game, convex target and what to play at the target."""

    game: VectorGame
    target: ConvexTarget
    restrict_to_hull: bool = False
    fallback: Optional[np.ndarray] = None
    eps: float = PROJECTED_GAME_EPS
    working_target: ConvexTarget = field(init=False, repr=False)

    def __post_init__(self):
        if self.target.dim != self.game.dim:
            raise ValueError("target and payoff dimensions differ")
        if self.fallback is None:
            self.fallback = np.full(self.game.n_actions, 1.0 / self.game.n_actions)
        self.fallback = np.asarray(self.fallback, dtype=float)
        self.working_target = (restrict_to_hull(self.game, self.target)
                               if self.restrict_to_hull else self.target)

    def kappa(self) -> float:
        return (self.game.norm_inf() + hull_target_norm(self.game, self.target)) ** 2


def blackwell_step(cfg: ApproachConfig, avg) -> np.ndarray:
    """Blackwell's mixed action given the current average payoff."""
    avg = np.asarray(avg, dtype=float)
    pi, dist = cfg.working_target.project(avg)
    if dist <= AT_TARGET_TOL:
        return cfg.fallback.copy()
    return blackwell_mixed_kernel(cfg.game.payoffs, avg, pi, cfg.fallback)


class BlackwellStrategy(Strategy):
    def __init__(self, cfg: ApproachConfig):
        self.cfg = cfg

    def next(self, history: History):
        if history.n == 0:
            return self.cfg.fallback.copy()
        return blackwell_step(self.cfg, history.avg)


# ---------------------------------------------------------------------------
# sup-norm approachability of a box by an exponential potential


def box_transform(game: VectorGame, box: Box) -> np.ndarray:
    """Payoffs ``(g - upper, lower - g)``: the box becomes the negative orthant."""
    if not (np.all(np.isfinite(box.lower)) and np.all(np.isfinite(box.upper))):
        raise ValueError("sup-norm potential needs a bounded box")
    g = game.payoffs
    return np.concatenate([g - box.upper, box.lower - g], axis=2)


def potential_eta(n_coords: int, block_length: int) -> float:
    """Learning rate ``sqrt(log(n_coords) / block_length)``."""
    return math.sqrt(math.log(n_coords) / block_length)


@dataclass
class PotentialState:
    """Cumulative transformed payoff within the current doubling block."""

    n_coords: int
    G: np.ndarray = None
    block: int = 0
    in_block: int = 0

    def __post_init__(self):
        if self.G is None:
            self.G = np.zeros(self.n_coords)

    @property
    def eta(self) -> float:
        return potential_eta(self.n_coords, 2 ** self.block)

    def advance(self, h) -> None:
        self.G = self.G + np.asarray(h, dtype=float)
        self.in_block += 1
        if self.in_block == 2 ** self.block:
            self.block += 1
            self.in_block = 0
            self.G = np.zeros(self.n_coords)


@jit
def potential_weights_kernel(G, eta):
    """Softmax weights ``exp(eta G) / sum exp(eta G)`` over the box coordinates."""
    s = eta * G
    s = np.exp(s - s.max())
    return s / s.sum()


@jit
def potential_mixed_kernel(H, G, eta):
    A, B, D = H.shape
    w = potential_weights_kernel(G, eta)
    M = np.empty((A, B))
    for a in range(A):
        for b in range(B):
            M[a, b] = np.dot(w, H[a, b])
    return row_minimizer_kernel(M)


def potential_linf_step(state: PotentialState, transformed_payoffs: np.ndarray) -> np.ndarray:
    """Mixed action minimising the softmax-weighted transformed payoff."""
    return potential_mixed_kernel(transformed_payoffs, state.G, state.eta)


class PotentialLinfStrategy(Strategy):
    """Approach a box in sup norm; pair with the original game in the engine."""

    def __init__(self, game: VectorGame, box: Box):
        self.H = box_transform(game, box)
        self.state = PotentialState(self.H.shape[2])

    def reset(self, game):
        self.state = PotentialState(self.H.shape[2])

    def next(self, history):
        return potential_linf_step(self.state, self.H)

    def observe(self, history):
        b = history.last_nature
        if history.last_action >= 0:
            h = self.H[history.last_action, b]
        else:
            h = history.last_mixed @ self.H[:, b]
        self.state.advance(h)


def potential_linf_bound(d: int, n) -> np.ndarray:
    """``14 sqrt(log(2d) / n)`` for payoffs and box bounds of sup norm at most 1."""
    return 14.0 * np.sqrt(math.log(2 * d) / np.asarray(n, dtype=float))


# ---------------------------------------------------------------------------
# ratio lifts


def lift_weighted(game: VectorGame, target: ConvexTarget, bounds=None):
    """Lift a game with stage durations to ``(w g, w)`` and the target to its ratio set.

    Returns ``(lifted_game, lifted_target, constants)`` where ``constants``
    holds ``w_low``, ``w_high`` and the two distance-comparison factors.
    """
    w = game.weights
    lo, hi = (float(w.min()), float(w.max())) if bounds is None else map(float, bounds)
    if not (0 < lo <= hi <= 1):
        raise ValueError("weight bounds must satisfy 0 < low <= high <= 1")
    lifted = np.concatenate([game.payoffs * w[:, :, None], w[:, :, None]], axis=2)
    gnorm = game.norm_inf()
    consts = {"w_low": lo, "w_high": hi,
              "upper_factor": 1.0 / lo + gnorm / lo ** 2,
              "lower_factor": hi}
    return VectorGame(lifted), ConeLift(target, "scalar", (lo, hi)), consts


def lift_activation(game: VectorGame, target: Box):
    """Lift partially active payoffs to ``(chi g, chi)`` and the box to its cone."""
    if not isinstance(target, Box) or np.any(target.lower > 0) or np.any(target.upper < 0):
        raise ValueError("activation lift needs a box containing the origin")
    c = game.activations
    lifted = np.concatenate([c * game.payoffs, c], axis=2)
    return VectorGame(lifted), ConeLift(target, "coordinatewise", (0.0, math.inf))


def ratio_average(lifted_avg, mode: str = "scalar") -> np.ndarray:
    """Recover ratio averages (0/0 read as 0) from a lifted average."""
    z = np.asarray(lifted_avg, dtype=float)
    if mode == "scalar":
        return z[:-1] / z[-1] if z[-1] > 0 else np.zeros(z.shape[0] - 1)
    d = z.shape[0] // 2
    out = np.zeros(d)
    np.divide(z[:d], z[d:], out=out, where=z[d:] > 0)
    return out


def activation_bound_factor(game: VectorGame, min_positive_frequency: float) -> float:
    """Factor ``2 ||g||_inf / f_min`` relating activated and lifted distances."""
    return 2.0 * game.norm_inf() / min_positive_frequency


# ---------------------------------------------------------------------------
# weak approachability of a non-convex target


WEAK_GAME = np.array([[[1.0, 0.0], [1.0, 1.0]],
                      [[0.0, 0.0], [0.0, 0.0]]])
_WEAK_PARTS = (Box([0.5, 0.0], [0.5, 0.25]), Box([1.0, 0.25], [1.0, 1.0]))


def weak_target_distance(z) -> float:
    """Distance to the union of the segments ``{1/2} x [0, 1/4]`` and ``{1} x [1/4, 1]``."""
    return min(p.project(np.asarray(z, dtype=float))[1] for p in _WEAK_PARTS)


class WeakApproachPlayer(Strategy):
    """Top for ``N`` stages; then Top forever if Nature played Right more than half the time, else Bottom."""

    def __init__(self, N: int):
        if N < 2 or N % 2:
            raise ValueError("horizon N must be a positive even integer")
        self.N = N

    def next(self, history):
        if history.n < self.N:
            return np.array([1.0, 0.0])
        # the decision only looks at the first N stages
        if not hasattr(self, "_choice") or history.n == self.N:
            self._choice = 0 if self._rights > self.N / 2 else 1
        return np.eye(2)[self._choice]

    def reset(self, game):
        self._rights = 0
        if hasattr(self, "_choice"):
            del self._choice

    def observe(self, history):
        if history.n <= self.N and history.last_nature == 1:
            self._rights += 1


def weak_approach_demo(N: int, nature: Nature, seed: int = 0) -> float:
    """Distance of the average payoff after ``2N`` stages to the non-convex target."""
    player = WeakApproachPlayer(N)
    t = run_episode(VectorGame(WEAK_GAME), player, nature, 2 * N, seed, "sampled")
    return weak_target_distance(t.payoff_sum / t.n)
