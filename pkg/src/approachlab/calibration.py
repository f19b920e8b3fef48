"""Calibrated forecasting of outcomes in ``{0, ..., Omega-1}``.

Distributions over ``Omega`` outcomes are written in reduced coordinates:
the probabilities of outcomes ``1 .. Omega-1`` (outcome 0 is implicit).  An
outcome ``w`` is the unit vector ``e_w`` in these coordinates, or the origin
for ``w = 0``.  For two outcomes a forecast is simply the probability of 1.
All norms below are Euclidean in reduced coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from ._jit import jit
from .engine import sample_index
from .errors import NumericalError
from .geometry import Grid
from .invariant import invariant_measure_kernel

NATURE_IID = 0
NATURE_ADVERSARIAL = 1  # least expected outcome given the mixed forecast


def outcome_vector(w: int, n_outcomes: int) -> np.ndarray:
    v = np.zeros(n_outcomes - 1)
    if w > 0:
        v[w - 1] = 1.0
    return v


def to_full(q) -> np.ndarray:
    """Reduced coordinates to a full probability vector."""
    q = np.asarray(q, dtype=float)
    return np.r_[1.0 - q.sum(), q]


def to_reduced(p) -> np.ndarray:
    return np.asarray(p, dtype=float)[1:].copy()


# ---------------------------------------------------------------------------
# grids


def make_regular_grid(d: int, eps: float, nu=None) -> Grid:
    """Regular grid of the reduced simplex ``{q >= 0, sum q <= 1}`` in ``R^d``.

    The step is the largest ``1/m <= 2 eps / sqrt(d)``, so the unit simplex is
    tiled exactly and every distribution lies within ``eps`` of a grid point.
    For ``eps >= 1`` the origin alone is such a grid.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if not 0 < eps:
        raise ValueError("eps must be positive")
    if eps >= 1.0:
        lattice = np.zeros((1, d), dtype=np.int64)
        return Grid(np.zeros((1, d)), nu, step=math.inf, lattice=lattice)
    m = max(1, math.ceil(math.sqrt(d) / (2.0 * eps) - 1e-12))
    pts = [c for c in itertools.product(range(m + 1), repeat=d) if sum(c) <= m]
    pts.sort(key=lambda c: tuple(reversed(c)))
    lattice = np.array(pts, dtype=np.int64).reshape(-1, d)
    return Grid(lattice / m, nu, step=1.0 / m, lattice=lattice)


def neighbor_mask(grid: Grid) -> np.ndarray:
    L = len(grid)
    mask = np.zeros((L, L), dtype=np.bool_)
    for i, j in grid.neighbors():
        mask[i, j] = True
    return mask


def full_mask(L: int) -> np.ndarray:
    mask = np.ones((L, L), dtype=np.bool_)
    np.fill_diagonal(mask, False)
    return mask


# ---------------------------------------------------------------------------
# transcripts and scores


@dataclass
class CalibTranscript:
    """Cells, forecasts and outcomes of a forecasting episode."""

    n_outcomes: int
    cells: np.ndarray
    predictions: np.ndarray
    outcomes: np.ndarray
    mixed: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    def outcome_vectors(self) -> np.ndarray:
        V = np.zeros((self.n, self.n_outcomes - 1))
        hit = self.outcomes > 0
        V[np.nonzero(hit)[0], self.outcomes[hit] - 1] = 1.0
        return V

    def to_csv(self, path) -> None:
        import csv
        from pathlib import Path

        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage", "cell", "prediction_coords", "outcome"])
            for m in range(self.n):
                coords = ";".join(repr(float(v)) for v in self.predictions[m])
                w.writerow([m + 1, int(self.cells[m]), coords, int(self.outcomes[m])])


def cell_statistics(cells, outcome_vecs, L: int):
    """Per-cell counts ``N`` and outcome sums ``S``."""
    cells = np.asarray(cells, dtype=np.int64)
    N = np.bincount(cells, minlength=L).astype(float)
    S = np.zeros((L, outcome_vecs.shape[1]))
    np.add.at(S, cells, outcome_vecs)
    return N, S


def score_from_stats(N, S, n, grid: Grid, squared: bool = False,
                     weighted: bool = False) -> float:
    """Calibration score from per-cell statistics after ``n`` stages.

    Plain: ``max_l (N_l/n) (||wbar_l - p_l|| - min_k ||wbar_l - p_k||)``.
    Squared/weighted: the same with ``||.||^2 - nu``.
    """
    P = grid.points
    nu = grid.nu if weighted else np.zeros(len(grid))
    best = 0.0
    for l in np.nonzero(N > 0)[0]:
        w = S[l] / N[l]
        dist = np.linalg.norm(w - P, axis=1)
        if squared or weighted:
            vals = dist ** 2 - nu
        else:
            vals = dist
        best = max(best, N[l] / n * (vals[l] - vals.min()))
    return float(best)


def calib_score(t: CalibTranscript, grid: Grid, squared: bool = False,
                weighted: bool = False) -> float:
    N, S = cell_statistics(t.cells, t.outcome_vectors(), len(grid))
    return score_from_stats(N, S, t.n, grid, squared, weighted)


def eps_score_from_stats(N, S, n, grid: Grid, eps: float) -> float:
    """``max_l (N_l/n) (||p_l - wbar_l|| - eps)`` over visited cells (0 if none)."""
    best = -math.inf
    for l in np.nonzero(N > 0)[0]:
        w = S[l] / N[l]
        best = max(best, N[l] / n * (np.linalg.norm(grid.points[l] - w) - eps))
    return float(best) if best > -math.inf else 0.0


def eps_calibration_score_1d(predictions, outcomes, eps: float) -> float:
    """Exact ``sup_p (|N|/n)(|pbar_N - wbar_N| - eps)`` for scalar forecasts.

    ``N`` is the set of stages whose forecast lies within ``eps`` of ``p``.
    The set only changes at ``forecast +- eps``, so breakpoints and the
    midpoints between them cover every case.
    """
    x = np.asarray(predictions, dtype=float).ravel()
    w = np.asarray(outcomes, dtype=float).ravel()
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    cx = np.r_[0.0, np.cumsum(xs)]
    cw = np.r_[0.0, np.cumsum(ws)]
    br = np.unique(np.r_[xs - eps, xs + eps])
    cand = np.r_[br, 0.5 * (br[1:] + br[:-1])]
    lo = np.searchsorted(xs, cand - eps - 1e-12, side="left")
    hi = np.searchsorted(xs, cand + eps + 1e-12, side="right")
    cnt = hi - lo
    ok = cnt > 0
    pbar = (cx[hi[ok]] - cx[lo[ok]]) / cnt[ok]
    wbar = (cw[hi[ok]] - cw[lo[ok]]) / cnt[ok]
    vals = cnt[ok] / n * (np.abs(pbar - wbar) - eps)
    return float(vals.max()) if vals.size else 0.0


def grid_score_bound(L: int, n, weighted_nu=None):
    """``6 sqrt(log L / n)``, or ``(6 + 3 max|nu|) sqrt(log L / n)`` with offsets."""
    c = 6.0 if weighted_nu is None else 6.0 + 3.0 * float(np.max(np.abs(weighted_nu)))
    return c * np.sqrt(math.log(max(L, 2)) / np.asarray(n, dtype=float))


# ---------------------------------------------------------------------------
# internal-regret forecasters


@jit
def calib_mixed_kernel(points, nu, mask, N, S, n):
    """Invariant measure of the positive cell-swap regrets (restricted by ``mask``).

    ``R[l, k] = sum over stages in cell l of rho(k, w) - rho(l, w)`` with
    ``rho(k, w) = -||w - p_k||^2 + nu_k``; only counts and sums are needed.
    """
    L = points.shape[0]
    M = np.zeros((L, L))
    if n == 0:
        return np.full(L, 1.0 / L)
    sq = np.empty(L)
    for k in range(L):
        sq[k] = np.dot(points[k], points[k])
    for l in range(L):
        if N[l] == 0.0:
            continue
        for k in range(L):
            if mask[l, k]:
                r = 2.0 * np.dot(S[l], points[k] - points[l]) - N[l] * (sq[k] - sq[l]) \
                    + N[l] * (nu[k] - nu[l])
                if r > 0.0:
                    M[l, k] = r / n
    lam, res = invariant_measure_kernel(M, 1e-11, 1000000)
    return lam


@dataclass
class ForecastState:
    """Per-cell counts and outcome sums of a forecaster."""

    grid: Grid
    n_outcomes: int

    def __post_init__(self):
        L = len(self.grid)
        self.N = np.zeros(L)
        self.S = np.zeros((L, self.n_outcomes - 1))
        self.n = 0

    def record(self, cell: int, outcome: int) -> None:
        self.N[cell] += 1
        if outcome > 0:
            self.S[cell, outcome - 1] += 1
        self.n += 1


def grid_forecaster_step(state: ForecastState, weighted: bool = False) -> np.ndarray:
    """Distribution over cells: invariant measure of positive internal regret."""
    g = state.grid
    nu = g.nu if weighted else np.zeros(len(g))
    return calib_mixed_kernel(g.points, nu, full_mask(len(g)), state.N, state.S, state.n)


def eps_forecaster_step(state: ForecastState) -> np.ndarray:
    """Same as :func:`grid_forecaster_step` with swaps limited to grid neighbours."""
    g = state.grid
    return calib_mixed_kernel(g.points, np.zeros(len(g)), neighbor_mask(g), state.N,
                              state.S, state.n)


def eps_score_bound(n):
    """``sqrt(1 / n)``."""
    return np.sqrt(1.0 / np.asarray(n, dtype=float))


# ---------------------------------------------------------------------------
# Foster's one-dimensional forecaster


@dataclass
class FosterState:
    """Cells ``[p_l - eps, p_l + eps]`` with ``p_l = eps + 2 l eps`` tiling ``[0, 1]``."""

    eps: float

    def __post_init__(self):
        L = 1.0 / (2.0 * self.eps)
        if not self.eps > 0 or abs(L - round(L)) > 1e-9:
            raise ValueError("Foster's grid needs 1/(2 eps) to be an integer")
        self.L = int(round(L))
        self.points = self.eps + 2.0 * self.eps * np.arange(self.L)
        self.N = np.zeros(self.L)
        self.S = np.zeros(self.L)
        self.n = 0
        self.probes = 0

    def excess(self, l: int) -> Tuple[float, float]:
        """``(e_l, d_l)``: frequency-weighted overshoot above and below the cell."""
        if self.N[l] == 0 or self.n == 0:
            return 0.0, 0.0
        f = self.N[l] / self.n
        w = self.S[l] / self.N[l]
        return f * (w - (self.points[l] + self.eps)), f * ((self.points[l] - self.eps) - w)

    def theta(self, l: int) -> float:
        self.probes += 1
        e, d = self.excess(l)
        if e > 0 and d > 0:
            raise AssertionError("cell average cannot lie on both sides of its cell")
        if e > 0:
            return e
        if d > 0:
            return -d
        return 0.0

    def record(self, cell: int, outcome: int) -> None:
        self.N[cell] += 1
        self.S[cell] += outcome
        self.n += 1


def foster_step(state: FosterState) -> np.ndarray:
    """Distribution over Foster's cells for the next stage.

    Bisection for the first cell with ``theta <= 0`` (a virtual positive cell
    sits below cell 0).  A zero there is predicted outright; otherwise the
    forecast mixes cells ``l*-1`` and ``l*`` so that the expected drift of
    both offending averages cancels: ``P(l*) = e / (e + d)``.
    """
    state.probes = 0
    lo, hi = -1, state.L - 1
    th_lo, th_hi = math.inf, None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        t = state.theta(mid)
        if t <= 0:
            hi, th_hi = mid, t
        else:
            lo, th_lo = mid, t
    if th_hi is None:
        th_hi = state.theta(hi)
    out = np.zeros(state.L)
    if th_hi == 0.0 or lo < 0:
        if th_hi != 0.0:
            raise AssertionError("cell 0 cannot have a negative theta")
        out[hi] = 1.0
        return out
    e, d = th_lo, -th_hi
    out[hi] = e / (e + d)
    out[lo] = d / (e + d)
    return out


@dataclass
class FosterRun:
    """Final per-cell excesses of a Foster episode and its bookkeeping."""

    e: np.ndarray
    d: np.ndarray
    max_probes: int
    cells: np.ndarray
    outcomes: np.ndarray

    @property
    def max_excess(self) -> float:
        """Largest overshoot ``max(e_l, d_l, 0)``; negative values mean the average sits inside its cell."""
        return float(max(self.e.max(), self.d.max(), 0.0))


def run_foster(eps: float, n: int, nature: str = "oakes-dawid", seed: int = 0,
               q: float = 0.37) -> FosterRun:
    """Play Foster's forecaster for ``n`` stages.

    ``nature`` is ``"oakes-dawid"`` (answers the expected forecast with the
    Oakes-Dawid rule), ``"iid"`` (outcome 1 with probability ``q``) or
    ``"alternating"``.  Stage ``m`` draws the cell with ``u[m, 0]`` and an
    i.i.d. outcome with ``u[m, 1]`` of ``default_rng(seed).random((n, 2))``.
    Raises ``AssertionError`` if some cell ever has ``e > 0`` and ``d > 0``.
    """
    if nature not in ("oakes-dawid", "iid", "alternating"):
        raise ValueError(f"unknown Foster adversary {nature!r}")
    state = FosterState(eps)
    u = np.random.default_rng(seed).random((n, 2))
    cells = np.empty(n, dtype=np.int64)
    outs = np.empty(n, dtype=np.int64)
    max_probes = 0
    for m in range(n):
        dist = foster_step(state)
        max_probes = max(max_probes, state.probes)
        l = sample_index(dist, u[m, 0])
        if nature == "oakes-dawid":
            w = oakes_dawid_next(float(dist @ state.points))
        elif nature == "iid":
            w = int(u[m, 1] < q)
        else:
            w = m % 2
        state.record(l, w)
        cells[m], outs[m] = l, w
        for k in range(state.L):
            e, d = state.excess(k)
            if e > 0 and d > 0:
                raise AssertionError(f"cell {k} overshoots on both sides at stage {m + 1}")
    ex = np.array([state.excess(k) for k in range(state.L)]).reshape(-1, 2)
    return FosterRun(ex[:, 0], ex[:, 1], max_probes, cells, outs)


# ---------------------------------------------------------------------------
# deterministic forecasting and its defeat


def oakes_dawid_next(p: float) -> int:
    """Outcome that defeats a deterministic forecast ``p`` of outcome 1."""
    return 0 if p >= 0.5 else 1


def frequency_forecaster_vs_oakes_dawid(n: int):
    """Forecast the running frequency of 1s (1/2 at the start) against Oakes-Dawid."""
    preds = np.empty(n)
    outs = np.empty(n, dtype=np.int64)
    ones = 0
    for m in range(n):
        p = ones / m if m else 0.5
        w = oakes_dawid_next(p)
        preds[m], outs[m] = p, w
        ones += w
    return preds, outs


# ---------------------------------------------------------------------------
# rounding to a grid and doubling schedules


def triangulation_round(p, grid: Grid):
    """Split ``p`` into a distribution on grid vertices with mean ``p``.

    Uses the Kuhn triangulation after the tail-sum change of coordinates
    ``y_i = sum_{j >= i} q_j``, under which the reduced simplex is a union of
    Kuhn cells.  Returns ``(indices, weights)``; for two outcomes this is
    linear interpolation between adjacent grid points.
    """
    if grid.lattice is None or not math.isfinite(grid.step):
        if len(grid) == 1:
            return np.array([0]), np.array([1.0])
        raise ValueError("triangulation needs a regular grid")
    q = np.clip(np.asarray(p, dtype=float).ravel(), 0.0, None)
    if q.shape[0] != grid.dim:
        raise ValueError("dimension mismatch")
    if q.sum() > 1.0:
        q = q / q.sum()
    m = int(round(1.0 / grid.step))
    d = grid.dim
    y = np.cumsum(q[::-1])[::-1] * m
    base = np.minimum(np.floor(y + 1e-12), m).astype(np.int64)
    f = np.clip(y - base, 0.0, 1.0)
    order = np.argsort(-f, kind="stable")
    index = {tuple(c): i for i, c in enumerate(grid.lattice)}
    verts = [base.copy()]
    for k in order:
        v = verts[-1].copy()
        v[k] += 1
        verts.append(v)
    fs = f[order]
    lam = np.empty(d + 1)
    lam[0] = 1.0 - fs[0]
    lam[1:d] = fs[:-1] - fs[1:]
    lam[d] = fs[-1]
    idx, wts = [], []
    for v, w in zip(verts, lam):
        if w <= 1e-15:
            continue
        n_coords = v - np.r_[v[1:], 0]
        key = tuple(int(c) for c in n_coords)
        if key not in index:
            raise NumericalError("rounding left the grid", float(w))
        idx.append(index[key])
        wts.append(w)
    wts = np.array(wts)
    return np.array(idx, dtype=np.int64), wts / wts.sum()


def borel_doubling_schedule(d: int, blocks: int) -> List[Tuple[float, int]]:
    """``[(eps_k, 2^k)]`` with ``eps_k = (d / 2^k)^(1 / (d + 2))``."""
    return [((d / 2 ** k) ** (1.0 / (d + 2)), 2 ** k) for k in range(blocks)]


# ---------------------------------------------------------------------------
# episode driver (Python level)


def run_forecaster(step: Callable[[ForecastState], np.ndarray], grid: Grid,
                   n_outcomes: int, nature: Callable, n: int, seed: int) -> CalibTranscript:
    """Play a randomised forecaster against ``nature(state, mixed, rng) -> outcome``.

    The forecaster's cell draw precedes Nature's draws within each stage.
    """
    rng = np.random.default_rng(seed)
    state = ForecastState(grid, n_outcomes)
    cells = np.empty(n, dtype=np.int64)
    outs = np.empty(n, dtype=np.int64)
    mixed = np.empty((n, len(grid)))
    for m in range(n):
        lam = step(state)
        l = sample_index(lam, rng.random())
        w = int(nature(state, lam, rng))
        if not 0 <= w < n_outcomes:
            raise ValueError("nature returned an invalid outcome")
        cells[m], outs[m], mixed[m] = l, w, lam
        state.record(l, w)
    return CalibTranscript(n_outcomes, cells, grid.points[cells], outs, mixed)


def iid_outcomes(q):
    q = np.asarray(q, dtype=float)

    def nature(state, lam, rng):
        return sample_index(q, rng.random())

    return nature


def least_expected_outcome(grid: Grid):
    """Adaptive Nature: the outcome the mixed forecast finds least likely."""

    def nature(state, lam, rng):
        full = to_full(lam @ grid.points)
        return int(np.argmin(full))

    return nature
