"""Verification experiments: empirical rates against their proven bounds.

Each ``criterion_*`` function runs one experiment and returns a
:class:`CriterionResult` holding every individual comparison.  Suites group
criteria for ``approachlab verify``.  ``trials`` overrides the number of
seeds (useful for smoke runs); the defaults are the full experiment sizes.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .approach import (
    ApproachConfig,
    _simplex_grid,
    box_transform,
    check_approachable,
    potential_linf_bound,
    weak_approach_demo,
)
from .calibration import (
    eps_calibration_score_1d,
    eps_score_bound,
    eps_score_from_stats,
    frequency_forecaster_vs_oakes_dawid,
    full_mask,
    grid_score_bound,
    make_regular_grid,
    neighbor_mask,
    score_from_stats,
)
from .engine import FixedNature, ScriptedNature, SequenceNature, VectorGame, coin_game
from .equilibria import NPlayerGame, selfplay, zerosum_optimality
from .geometry import Box, HalfspaceIntersection, distance_linf, negative_orthant
from .kernels import (
    ALGO_EW,
    ALGO_INTERNAL,
    ALGO_PHI,
    ALGO_RM,
    blackwell_episode_kernel,
    calib_episode_kernel,
    checkpoint_array,
    episode_uniforms,
    potential_episode_kernel,
    regret_episode_kernel,
)
from .regret import (
    RegretState,
    SwapFamily,
    expected_external_increment,
    expected_internal_increment,
    ext_to_phi_step,
    external_regret_game,
    internal_regret_game,
    invariant_step,
    regret_matching_over,
    theta_matrix,
    update_regret,
)
from .zerosum import solve

DEFAULT_TRIALS = 200
STAGES = (100, 1000, 10000)


@dataclass
class Check:
    label: str
    value: float
    bound: float
    ok: bool


@dataclass
class CriterionResult:
    number: int
    name: str
    checks: List[Check] = field(default_factory=list)
    seconds: float = 0.0
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.ok for c in self.checks)

    def add(self, label: str, value: float, bound: float, ok: Optional[bool] = None) -> None:
        value, bound = float(value), float(bound)
        self.checks.append(Check(label, value, bound, value <= bound if ok is None else bool(ok)))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.error:
            detail = f"error: {self.error}"
        else:
            worst = [c for c in self.checks if not c.ok] or self.checks
            c = worst[0]
            detail = f"{len(self.checks)} checks; {c.label}: {c.value:.4g} vs {c.bound:.4g}"
        return f"[{status}] criterion {self.number:2d} {self.name}: {detail} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _trials(trials: Optional[int], default: int = DEFAULT_TRIALS) -> int:
    return default if trials is None else max(1, int(trials))


# ---------------------------------------------------------------------------
# approachability


def criterion_lln(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Coin game with target {0}: ``E|avg_n|^2 = 1/n``.

    Reproduces the engine's stream for Nature's fair coin in expected mode
    (one uniform per stage, heads below 1/2) without the per-stage overhead.
    """
    trials = _trials(trials, 10000)
    ns = (10, 100, 1000)
    g = coin_game().payoffs[0, :, 0]
    sq = np.empty((trials, len(ns)))
    for i in range(trials):
        u = np.random.default_rng(seed + i).random(ns[-1])
        s = np.cumsum(np.where(u < 0.5, g[0], g[1]))
        sq[i] = (s[np.array(ns) - 1] / np.array(ns)) ** 2
    mean = sq.mean(axis=0)
    se = sq.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.full(len(ns), np.inf)
    for k, n in enumerate(ns):
        res.add(f"|mean - 1/n| at n={n} (3 s.e.)", abs(mean[k] - 1.0 / n), 3 * se[k])


def random_halfspace_game(seed: int, A: int, B: int, d: int):
    """Random game in ``[-1, 1]`` with a boundary-tight approachable halfspace target.

    The halfspace ``{<w, z> <= v}`` uses the exact value ``v = min_x max_y <w, g(x, y)>``,
    so the target is approachable but not for free.
    """
    rng = np.random.default_rng(seed)
    game = VectorGame(rng.uniform(-1.0, 1.0, (A, B, d)))
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    M = np.einsum("abk,k->ab", game.payoffs, w)
    v_neg, x, _ = solve(-M)
    v = -v_neg
    witness = game.payoffs[:, 0].T @ x - 1e-12 * w
    return game, HalfspaceIntersection(w[None, :], [v], witness)


def _blackwell_distances(game, cfg, target, nature, trials, seed, stages):
    B = game.n_nature
    enc = cfg.working_target.encode()
    cp = checkpoint_array(stages)
    D = np.empty((trials, cp.size))
    for i in range(trials):
        u = episode_uniforms(seed + i, int(cp[-1]))
        avg = blackwell_episode_kernel(game.payoffs, *enc, cfg.fallback, nature,
                                       np.full(B, 1.0 / B), False, u, cp)
        D[i] = [target.project(z)[1] for z in avg]
    return cp, D.mean(axis=0)


BLACKWELL_CASES = ((2, 2, 1, 1), (3, 4, 2, 1), (4, 3, 3, 1), (4, 3, 3, 0))


def criterion_blackwell(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Blackwell's strategy on the target restricted to the payoff hull: ``E d <= sqrt(kappa/n)``."""
    trials = _trials(trials)
    for k, (A, B, d, nature) in enumerate(BLACKWELL_CASES):
        game, target = random_halfspace_game(1000 + 17 * k, A, B, d)
        chk = check_approachable(game, target, 20)
        res.add(f"delta_hat game {A}x{B}x{d}", chk.delta_hat, 1e-6)
        cfg = ApproachConfig(game, target, restrict_to_hull=True)
        kap = cfg.kappa()
        cp, mean = _blackwell_distances(game, cfg, target, nature, trials, seed, STAGES)
        tag = "adaptive" if nature else "iid"
        for n, m in zip(cp, mean):
            res.add(f"game {A}x{B}x{d} {tag} n={n}", m, math.sqrt(kap / n))


def criterion_cone(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Blackwell's strategy on the negative orthant of regret games: ``E d <= ||g||/sqrt(n)``."""
    trials = _trials(trials)
    rng = np.random.default_rng(7)
    cases = []
    for A, nature in ((2, 1), (5, 0), (5, 1)):
        cases.append((f"external A={A}", external_regret_game(rng.random((A, A + 1))), nature))
    cases.append(("internal A=3", internal_regret_game(rng.random((3, 4))), 1))
    for label, game, nature in cases:
        target = negative_orthant(game.dim)
        cfg = ApproachConfig(game, target)
        cp, mean = _blackwell_distances(game, cfg, target, nature, trials, seed, STAGES)
        tag = "adaptive" if nature else "iid"
        for n, m in zip(cp, mean):
            res.add(f"{label} {tag} n={n}", m, game.norm_inf() / math.sqrt(n))


def random_box_game(seed: int, A: int, B: int, d: int, slack: float = 1.1,
                    resolution: int = 20):
    """Payoffs in ``[-1, 1]`` and a nearly tight approachable cube.

    The smallest cube ``c + r [-1, 1]^d`` that contains some ``g(x_y, y)`` for
    every ``y`` of a simplex grid comes from one linear program; its
    half-width is then enlarged by ``slack`` to cover the grid's gaps.
    """
    from scipy.optimize import linprog

    rng = np.random.default_rng(seed)
    game = VectorGame(rng.uniform(-1.0, 1.0, (A, B, d)))
    Y = _simplex_grid(B, resolution)
    K = Y.shape[0]
    nv = d + 1 + K * A                       # c, r, then one x per grid point
    rows, rhs = [], []
    for j, y in enumerate(Y):
        Gy = np.einsum("b,abk->ka", y, game.payoffs)   # (d, A)
        for k in range(d):
            for sign in (1.0, -1.0):
                row = np.zeros(nv)
                row[d + 1 + j * A: d + 1 + (j + 1) * A] = sign * Gy[k]
                row[k] = -sign
                row[d] = -1.0
                rows.append(row)
                rhs.append(0.0)
    A_eq = np.zeros((K, nv))
    for j in range(K):
        A_eq[j, d + 1 + j * A: d + 1 + (j + 1) * A] = 1.0
    cost = np.zeros(nv)
    cost[d] = 1.0
    res = linprog(cost, A_ub=np.array(rows), b_ub=rhs, A_eq=A_eq, b_eq=np.ones(K),
                  bounds=[(None, None)] * d + [(0, None)] + [(0, None)] * (K * A),
                  method="highs")
    c, r = res.x[:d], slack * res.x[d]
    return game, Box(c - r, c + r)


def criterion_potential(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Exponential potential on boxes: ``E d_inf <= 14 sqrt(log(2d)/n)``."""
    trials = _trials(trials)
    stages = [2 ** k for k in range(7, 15)]
    cp = checkpoint_array(stages)
    for A, B, d, nature in ((4, 4, 2, 1), (3, 4, 4, 1), (3, 4, 4, 0)):
        game, box = random_box_game(304, A, B, d)
        res.add(f"delta_hat box d={d}", check_approachable(game, box, 40).delta_hat, 1e-6)
        H = box_transform(game, box)
        B = game.n_nature
        D = np.empty((trials, cp.size))
        for i in range(trials):
            u = episode_uniforms(seed + i, int(cp[-1]))
            avg = potential_episode_kernel(game.payoffs, H, nature, np.full(B, 1.0 / B), u, cp)
            D[i] = [distance_linf(box, z) for z in avg]
        bound = potential_linf_bound(d, cp)
        tag = "adaptive" if nature else "iid"
        for n, m, b in zip(cp, D.mean(axis=0), bound):
            res.add(f"box d={d} {tag} n={n}", m, b)


WEAK_NATURES = {
    "always-L": lambda N: FixedNature(0),
    "always-R": lambda N: FixedNature(1),
    "random": lambda N: FixedNature([0.5, 0.5]),
    "alternating": lambda N: SequenceNature([0, 1]),
    "R-then-L": lambda N: ScriptedNature(lambda h: 1 if h.n < N // 2 + 1 else 0),
}


def criterion_weak(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Two-phase play puts the average exactly in the non-convex target."""
    for N in (10, 100, 1000):
        for name, make in WEAK_NATURES.items():
            res.add(f"N={N} nature={name}", weak_approach_demo(N, make(N), seed), 1.0 / N)


# ---------------------------------------------------------------------------
# regret


def _regret_means(rho, algo, nature, maps, trials, seed, stages):
    A, B = rho.shape
    cp = checkpoint_array(stages)
    r_all = np.empty((trials, cp.size, A))
    R_all = np.empty((trials, cp.size, A, A))
    phi_all = np.empty((trials, cp.size, maps.shape[0]))
    for i in range(trials):
        u = episode_uniforms(seed + i, int(cp[-1]))
        r_all[i], R_all[i], phi_all[i] = regret_episode_kernel(
            rho, algo, nature, np.full(B, 1.0 / B), maps, u, cp)
    n = cp.astype(float)
    return (cp, r_all / n[None, :, None], R_all / n[None, :, None, None],
            phi_all / n[None, :, None])


def criterion_external(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Regret matching ``E||r+||_2 <= sqrt(A/n)``; exponential weights ``E||r+||_inf <= 2 sqrt(log A/n)``."""
    trials = _trials(trials)
    rng = np.random.default_rng(11)
    for A in (2, 5):
        rho = rng.random((A, A + 1))
        maps = SwapFamily.external(A).maps
        for nature, tag in ((0, "iid"), (1, "adaptive")):
            cp, r, _, _ = _regret_means(rho, ALGO_RM, nature, maps, trials, seed, STAGES)
            vals = np.linalg.norm(np.maximum(r, 0.0), axis=2).mean(axis=0)
            for n, v in zip(cp, vals):
                res.add(f"RM A={A} {tag} n={n}", v, math.sqrt(A / n))
            cp, r, _, _ = _regret_means(rho, ALGO_EW, nature, maps, trials, seed, STAGES)
            vals = np.maximum(r, 0.0).max(axis=2).mean(axis=0)
            for n, v in zip(cp, vals):
                res.add(f"EW A={A} {tag} n={n}", v, 2.0 * math.sqrt(math.log(A) / n))


def criterion_internal(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Invariant-measure strategies: ``E||R+||_2 <= sqrt(A/n)``, ``E||R^Phi+||_2 <= sqrt(A_Phi/n)``."""
    trials = _trials(trials)
    rng = np.random.default_rng(13)
    for A in (2, 5):
        rho = rng.random((A, A + 1))
        maps = SwapFamily.internal(A).maps
        for nature, tag in ((0, "iid"), (1, "adaptive")):
            cp, _, R, _ = _regret_means(rho, ALGO_INTERNAL, nature, maps, trials, seed, STAGES)
            vals = np.linalg.norm(np.maximum(R, 0.0).reshape(R.shape[0], R.shape[1], -1),
                                  axis=2).mean(axis=0)
            for n, v in zip(cp, vals):
                res.add(f"internal A={A} {tag} n={n}", v, math.sqrt(A / n))
    for label, fam in (("Phi_i A=4", SwapFamily.internal(4)), ("swap A=3", SwapFamily.swap(3))):
        A = fam.n_actions
        rho = rng.random((A, A + 1))
        cp, _, _, phi = _regret_means(rho, ALGO_PHI, 1, fam.maps, trials, seed, STAGES)
        vals = np.linalg.norm(np.maximum(phi, 0.0), axis=2).mean(axis=0)
        for n, v in zip(cp, vals):
            res.add(f"{label} adaptive n={n}", v, math.sqrt(fam.moved() / n))


def criterion_orthogonality(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Per-stage orthogonality of the played mixed action and the expected regret increment."""
    episodes = _trials(trials, 20)
    n = 300
    worst = {"external": 0.0, "internal": 0.0, "phi": 0.0}
    for e in range(episodes):
        rng = np.random.default_rng(seed + e)
        A = int(rng.integers(2, 6))
        B = int(rng.integers(2, 5))
        rho = rng.random((A, B))
        fam = SwapFamily.swap(A) if A <= 3 else SwapFamily.internal(A)
        states = {"external": RegretState(A, fam), "internal": RegretState(A, fam),
                  "phi": RegretState(A, fam)}
        for m in range(n):
            b = int(rng.integers(B))
            U = rho[:, b]
            st = states["external"]
            pos = np.maximum(st.r_sum, 0.0)
            x = regret_matching_over(st.r_sum)
            val = pos @ expected_external_increment(x, U) if pos.sum() > 0 else 0.0
            worst["external"] = max(worst["external"], abs(val) / max(1.0, pos.sum()))
            st = states["internal"]
            M = np.maximum(st.R_sum, 0.0)
            lam = invariant_step(M)
            val = np.sum(M * expected_internal_increment(lam, U))
            worst["internal"] = max(worst["internal"], abs(val) / max(1.0, M.sum()))
            st = states["phi"]
            Mp = np.maximum(st.phi_sum, 0.0)
            T = theta_matrix(Mp, fam)
            np.fill_diagonal(T, 0.0)
            lam_p = invariant_step(T)
            inc = U[fam.maps] @ lam_p - lam_p @ U
            val = Mp @ inc
            worst["phi"] = max(worst["phi"], abs(val) / max(1.0, Mp.sum()))
            for key, s in states.items():
                xs = {"external": x, "internal": lam, "phi": lam_p}[key]
                a = int(rng.choice(A, p=xs))
                update_regret(s, a, U)
    for key, v in worst.items():
        res.add(f"max |<regret+, E increment>| / ||regret+||_1 ({key})", v, 1e-8)


def criterion_reduction(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Regret matching over internal swaps, mapped to actions, equals the invariant measure."""
    histories = _trials(trials, 100)
    worst = 0.0
    for h in range(histories):
        rng = np.random.default_rng(seed + h)
        A = int(rng.integers(2, 6))
        B = int(rng.integers(2, 5))
        rho = rng.random((A, B))
        fam = SwapFamily.internal(A)
        st = RegretState(A, fam)
        for m in range(int(rng.integers(1, 200))):
            a = int(rng.integers(A))
            update_regret(st, a, rho[:, int(rng.integers(B))])
        theta = regret_matching_over(st.phi_avg)
        p = ext_to_phi_step(theta, fam)
        q = invariant_step(np.maximum(st.R_avg, 0.0))
        worst = max(worst, float(np.abs(p - q).max()))
    res.add(f"max |ext_to_phi(RM) - invariant_step| over {histories} histories", worst, 1e-6)


# ---------------------------------------------------------------------------
# calibration


def _calib_scores(grid, n_outcomes, mask, nature, probs, trials, seed, stages, score):
    cp = checkpoint_array(stages)
    nu = grid.nu if grid.nu is not None else np.zeros(len(grid))
    out = np.empty((trials, cp.size))
    for i in range(trials):
        u = episode_uniforms(seed + i, int(cp[-1]))
        N, S = calib_episode_kernel(grid.points, nu, mask, n_outcomes, nature, probs, u, cp)
        out[i] = [score(N[c], S[c], cp[c]) for c in range(cp.size)]
    return cp, out.mean(axis=0)


def criterion_grid_calibration(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Grid forecaster: mean squared-norm score ``<= 6 sqrt(log L/n)`` (weighted: ``6 + 3 max|nu|``)."""
    trials = _trials(trials)
    rng = np.random.default_rng(17)
    cases = [(2, make_regular_grid(1, 0.05), (100, 500, 2000)),
             (3, make_regular_grid(2, 0.15), (100, 300, 1000))]
    for n_outcomes, grid, stages in cases:
        L = len(grid)
        mask = full_mask(L)
        probs = rng.dirichlet(np.ones(n_outcomes))
        for nature, tag in ((0, "iid"), (1, "adaptive")):
            cp, mean = _calib_scores(
                grid, n_outcomes, mask, nature, probs, trials, seed, stages,
                lambda N, S, n, grid=grid: score_from_stats(N, S, n, grid, squared=True))
            for n, m in zip(cp, mean):
                res.add(f"Omega={n_outcomes} L={L} {tag} n={n}", m, grid_score_bound(L, n))
        nu = rng.uniform(-0.1, 0.1, L)
        wgrid = type(grid)(grid.points, nu, step=grid.step, lattice=grid.lattice)
        cp, mean = _calib_scores(
            wgrid, n_outcomes, mask, 1, probs, trials, seed, stages,
            lambda N, S, n, g=wgrid: score_from_stats(N, S, n, g, weighted=True))
        for n, m in zip(cp, mean):
            res.add(f"weighted Omega={n_outcomes} L={L} adaptive n={n}", m,
                    grid_score_bound(L, n, nu))


def criterion_eps_independence(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Neighbour-restricted forecaster: mean sup-cell score minus eps ``<= sqrt(1/n)`` for every eps."""
    trials = _trials(trials)
    n = 10000
    for eps in (0.3, 0.1, 0.05):
        grid = make_regular_grid(1, eps)
        for nature, tag in ((0, "iid"), (1, "adaptive")):
            cp, mean = _calib_scores(
                grid, 2, neighbor_mask(grid), nature, np.array([0.63, 0.37]), trials, seed,
                (n,), lambda N, S, m, g=grid, e=eps: eps_score_from_stats(N, S, m, g, e))
            res.add(f"eps={eps} L={len(grid)} {tag} n={n}", mean[0], eps_score_bound(n))


def criterion_oakes_dawid(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Deterministic forecasting loses to Oakes-Dawid; the randomised grid forecaster does not."""
    trials = _trials(trials)
    n = 10000
    preds, outs = frequency_forecaster_vs_oakes_dawid(n)
    score = eps_calibration_score_1d(preds, outs, 0.1)
    res.add("frequency forecaster eps-score (eps=0.1) >= 0.05", score, 0.05, ok=score >= 0.05)
    grid = make_regular_grid(1, 0.1)
    cp, mean = _calib_scores(grid, 2, full_mask(len(grid)), 1, np.array([0.5, 0.5]), trials,
                             seed, (n,),
                             lambda N, S, m: score_from_stats(N, S, m, grid, squared=True))
    res.add(f"grid forecaster L={len(grid)} vs Oakes-Dawid n={n}", mean[0],
            grid_score_bound(len(grid), n))


# ---------------------------------------------------------------------------
# equilibria


EQUILIBRIUM_GAMES = {
    "chicken": NPlayerGame([[[0, -1], [1, -10]], [[0, 1], [-1, -10]]]),
    "battle-of-sexes": NPlayerGame([[[2, 0], [0, 1]], [[1, 0], [0, 2]]]),
    "coordination": NPlayerGame([[[1, 0], [0, 1]], [[1, 0], [0, 1]]]),
}


def criterion_equilibria(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """All-internal self play reaches correlated equilibria; zero-sum self play finds optimal play."""
    trials = _trials(trials)
    n = 10000
    for name, game in EQUILIBRIUM_GAMES.items():
        below = decreased = 0
        for i in range(trials):
            r = selfplay(game, "internal", n, seed + i, stages=[100, n])
            below += r.correlated[-1].max() < 0.05
            decreased += r.correlated[-1].max() <= r.correlated[0].max()
        frac = below / trials
        res.add(f"{name}: fraction of seeds with violation < 0.05", frac, 0.95, ok=frac >= 0.95)
        frac = decreased / trials
        res.add(f"{name}: fraction of seeds with violation(n) <= violation(100)", frac, 0.95,
                ok=frac >= 0.95)
    for name, rho in (("matching pennies", [[1, -1], [-1, 1]]),
                      ("rock-paper-scissors", [[0, -1, 1], [1, 0, -1], [-1, 1, 0]])):
        game = NPlayerGame.zero_sum(rho)
        A = len(rho)
        ex = np.empty((trials, 2))
        for i in range(trials):
            rep = zerosum_optimality(game, selfplay(game, "regret_matching", n, seed + i,
                                                    stages=[n]))
            ex[i] = rep.row_exploitability[-1], rep.col_exploitability[-1]
        for k, who in enumerate(("row", "column")):
            res.add(f"{name} {who} exploitability n={n}", ex[:, k].mean(), 4 * math.sqrt(A / n))


# ---------------------------------------------------------------------------
# oracles


def criterion_oracles(res: CriterionResult, trials=None, seed: int = 0) -> None:
    """Solvers against independent brute-force references on small random instances."""
    from . import oracles

    instances = _trials(trials, 1000)
    for name, fn in oracles.CHECKS.items():
        res.add(f"{name}: max error over {instances} instances", fn(instances, seed), 1e-7)


# ---------------------------------------------------------------------------
# registry


CRITERIA: Dict[int, tuple] = {
    1: ("lln-identity", criterion_lln),
    2: ("blackwell-rate", criterion_blackwell),
    3: ("cone-rate", criterion_cone),
    4: ("linf-potential-rate", criterion_potential),
    5: ("external-regret", criterion_external),
    6: ("internal-phi-regret", criterion_internal),
    7: ("orthogonality", criterion_orthogonality),
    8: ("grid-calibration", criterion_grid_calibration),
    9: ("eps-independence", criterion_eps_independence),
    10: ("oakes-dawid", criterion_oakes_dawid),
    11: ("weak-approachability", criterion_weak),
    12: ("equilibrium-dynamics", criterion_equilibria),
    13: ("oracle-equivalence", criterion_oracles),
    14: ("reduction-identity", criterion_reduction),
}

SUITES: Dict[str, List[int]] = {
    "lln": [1],
    "approach-rates": [2, 3, 4, 11],
    "regret-rates": [5, 6, 7, 14],
    "calibration-rates": [8, 9, 10],
    "equilibria": [12],
    "oracles": [13],
}
SUITES["all"] = sorted(CRITERIA)


def run_criterion(number: int, trials=None, seed: int = 0) -> CriterionResult:
    name, fn = CRITERIA[number]
    res = CriterionResult(number, name)
    t0 = time.perf_counter()
    try:
        fn(res, trials, seed)
    except Exception as exc:  # reported as a failed criterion
        res.error = f"{type(exc).__name__}: {exc}"
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(name: str, trials=None, seed: int = 0,
              report: Optional[Callable[[CriterionResult], None]] = None) -> List[CriterionResult]:
    if name not in SUITES:
        raise KeyError(name)
    out = []
    for k in SUITES[name]:
        r = run_criterion(k, trials, seed)
        if report is not None:
            report(r)
        out.append(r)
    return out
