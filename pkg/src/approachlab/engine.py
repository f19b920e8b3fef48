"""Repeated vector-payoff games: episodes, transcripts and Monte-Carlo runs.

An episode alternates a player strategy and Nature for ``n`` stages.  All
randomness of an episode comes from one ``numpy.random.Generator`` seeded
with the episode seed; within a stage the player's draw precedes Nature's.
In ``expected`` mode the player's mixed action is not sampled and the stage
payoff is ``g(x_m, b_m)``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import ConvexTarget

MODES = ("sampled", "expected")


class VectorGame:
    """Vector payoffs ``g[a, b, :]`` with optional stage weights and activations.

    Parameters
    ----------
    payoffs : array, shape (A, B, d)
    weights : array, shape (A, B), optional
        Stage durations, each in ``(0, 1]``.
    activations : array, shape (A, B, d), optional
        0/1 flags saying which coordinates are active at each action pair.
    """

    def __init__(self, payoffs, weights=None, activations=None):
        g = np.asarray(payoffs, dtype=float)
        if g.ndim == 2:
            g = g[:, :, None]
        if g.ndim != 3 or 0 in g.shape:
            raise ValueError("payoffs must have shape (A, B, d)")
        if not np.all(np.isfinite(g)):
            raise ValueError("payoffs have non-finite entries")
        self.payoffs = g
        A, B, d = g.shape
        if weights is None:
            self.weights = np.ones((A, B))
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (A, B) or np.any(w <= 0) or np.any(w > 1):
                raise ValueError("weights must have shape (A, B) with entries in (0, 1]")
            self.weights = w
        if activations is None:
            self.activations = np.ones((A, B, d))
        else:
            c = np.asarray(activations, dtype=float)
            if c.shape != g.shape or not np.all((c == 0) | (c == 1)):
                raise ValueError("activations must be 0/1 with the payoff shape")
            self.activations = c

    @property
    def n_actions(self) -> int:
        return self.payoffs.shape[0]

    @property
    def n_nature(self) -> int:
        return self.payoffs.shape[1]

    @property
    def dim(self) -> int:
        return self.payoffs.shape[2]

    def norm_inf(self) -> float:
        """``max_{a,b} ||g(a, b)||_2``."""
        return float(np.linalg.norm(self.payoffs, axis=2).max())

    def mixed_payoff(self, x, y) -> np.ndarray:
        return np.einsum("a,b,abk->k", x, y, self.payoffs)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.payoffs, self.weights, self.activations):
            h.update(np.ascontiguousarray(arr).tobytes())
            h.update(str(arr.shape).encode())
        return h.hexdigest()


def kappa(game: VectorGame, target_norm: float) -> float:
    """``(||g||_inf + ||E_g||)^2`` given an upper bound on the target's norm."""
    return (game.norm_inf() + target_norm) ** 2


class History:
    """Running state of an episode, shared read-only with both sides."""

    def __init__(self, game: VectorGame):
        self.game = game
        A, B, d = game.payoffs.shape
        self.n = 0
        self.payoff_sum = np.zeros(d)
        self.weight_sum = 0.0
        self.weighted_sum = np.zeros(d)
        self.activation_sum = np.zeros(d)
        self.activated_sum = np.zeros(d)
        self.action_counts = np.zeros(A)
        self.nature_counts = np.zeros(B)
        self.last_action = -1
        self.last_mixed: Optional[np.ndarray] = None
        self.last_nature = -1
        self.last_payoff: Optional[np.ndarray] = None

    @property
    def avg(self) -> np.ndarray:
        return self.payoff_sum / self.n if self.n else np.zeros_like(self.payoff_sum)


class Strategy:
    """Player strategy: ``next(history)`` returns a mixed action over ``A``."""

    def reset(self, game: VectorGame) -> None:
        pass

    def next(self, history: History) -> np.ndarray:
        raise NotImplementedError

    def observe(self, history: History) -> None:
        """Called after every stage with the updated history."""


class Nature:
    """Opponent: ``next(history, x)`` returns an index or a mixed action over ``B``.

    ``x`` is the player's mixed action for the current stage, which an
    adaptive Nature may exploit (strategies are public, realisations are not).
    """

    def reset(self, game: VectorGame) -> None:
        pass

    def next(self, history: History, x: np.ndarray):
        raise NotImplementedError


class FixedStrategy(Strategy):
    def __init__(self, x):
        self.x = np.asarray(x, dtype=float)

    def next(self, history):
        return self.x


class FixedNature(Nature):
    """Always the same pure action, or i.i.d. draws from a fixed mixed action."""

    def __init__(self, action):
        self.action = action if np.isscalar(action) else np.asarray(action, dtype=float)

    def next(self, history, x):
        return self.action


class ScriptedNature(Nature):
    """Plays ``fn(history)``, a deterministic function of the past."""

    def __init__(self, fn: Callable[[History], int]):
        self.fn = fn

    def next(self, history, x):
        return self.fn(history)


class SequenceNature(Nature):
    def __init__(self, actions: Sequence[int]):
        self.actions = list(actions)

    def next(self, history, x):
        return self.actions[history.n % len(self.actions)]


def sample_index(p: np.ndarray, u: float) -> int:
    """Inverse-CDF sample: first index whose cumulative mass exceeds ``u``."""
    c = np.cumsum(p)
    i = int(np.searchsorted(c, u * c[-1], side="right"))
    return min(i, len(p) - 1)


@dataclass
class Transcript:
    """Per-stage record of an episode."""

    mode: str
    seed: int
    game: VectorGame = field(repr=False)
    actions: np.ndarray
    mixed: np.ndarray
    nature_actions: np.ndarray
    payoffs: np.ndarray
    weights: np.ndarray
    weighted_payoffs: np.ndarray
    activations: np.ndarray
    activated_payoffs: np.ndarray
    payoff_sum: np.ndarray

    @property
    def n(self) -> int:
        return self.payoffs.shape[0]

    def cesaro_averages(self) -> np.ndarray:
        """Row ``m-1`` holds the average of the first ``m`` payoffs."""
        return np.cumsum(self.payoffs, axis=0) / np.arange(1, self.n + 1)[:, None]

    def weighted_averages(self) -> np.ndarray:
        num = np.cumsum(self.weighted_payoffs, axis=0)
        den = np.cumsum(self.weights)[:, None]
        return num / den

    def activated_averages(self) -> np.ndarray:
        """Coordinate-wise averages over active stages only (0/0 read as 0)."""
        num = np.cumsum(self.activated_payoffs, axis=0)
        den = np.cumsum(self.activations, axis=0)
        out = np.zeros_like(num)
        np.divide(num, den, out=out, where=den > 0)
        return out

    def averages(self, kind: str = "cesaro") -> np.ndarray:
        if kind == "cesaro":
            return self.cesaro_averages()
        if kind == "weighted":
            return self.weighted_averages()
        if kind == "activated":
            return self.activated_averages()
        raise ValueError(f"unknown averaging: {kind}")

    def to_csv(self, path) -> Path:
        """Write the stage table and a JSON sidecar with seed, mode and game hash."""
        path = Path(path)
        d = self.payoffs.shape[1]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage", "player_action", "nature_action"]
                       + [f"payoff_{k}" for k in range(d)] + ["weight"])
            for m in range(self.n):
                w.writerow([m + 1, int(self.actions[m]), int(self.nature_actions[m])]
                           + [repr(float(v)) for v in self.payoffs[m]]
                           + [repr(float(self.weights[m]))])
        side = path.with_suffix(path.suffix + ".json")
        side.write_text(json.dumps({"seed": self.seed, "mode": self.mode,
                                    "game_hash": self.game.fingerprint(),
                                    "stages": self.n}, indent=2))
        return path


def read_transcript_csv(path):
    """Read back ``(actions, nature_actions, payoffs, weights)`` from :meth:`Transcript.to_csv`."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    body = np.array([[float(v) for v in r] for r in rows[1:]])
    return (body[:, 1].astype(int), body[:, 2].astype(int), body[:, 3:-1], body[:, -1])


def run_episode(game: VectorGame, player: Strategy, nature: Nature, n: int,
                seed: int, mode: str = "sampled") -> Transcript:
    """Play ``n`` stages and return the transcript."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if n < 1:
        raise ValueError("an episode needs at least one stage")
    rng = np.random.default_rng(seed)
    A, B, d = game.payoffs.shape
    player.reset(game)
    nature.reset(game)
    h = History(game)
    actions = np.full(n, -1, dtype=np.int64)
    mixed = np.empty((n, A))
    nat = np.empty(n, dtype=np.int64)
    pay = np.empty((n, d))
    wts = np.empty(n)
    wpay = np.empty((n, d))
    act = np.empty((n, d))
    apay = np.empty((n, d))
    for m in range(n):
        x = np.asarray(player.next(h), dtype=float)
        if x.shape != (A,) or np.any(x < -1e-9) or abs(x.sum() - 1.0) > 1e-6:
            raise ValueError(f"player returned an invalid mixed action at stage {m + 1}")
        x = np.maximum(x, 0.0)
        x /= x.sum()
        a = sample_index(x, rng.random()) if mode == "sampled" else -1
        b = nature.next(h, x)
        if not np.isscalar(b):
            y = np.asarray(b, dtype=float)
            b = sample_index(y, rng.random())
        b = int(b)
        if not 0 <= b < B:
            raise ValueError(f"nature returned an invalid action at stage {m + 1}")
        if mode == "sampled":
            g = game.payoffs[a, b]
            w = game.weights[a, b]
            wg = w * g
            c = game.activations[a, b]
            cg = c * g
        else:
            g = x @ game.payoffs[:, b]
            w = float(x @ game.weights[:, b])
            wg = (x * game.weights[:, b]) @ game.payoffs[:, b]
            c = x @ game.activations[:, b]
            cg = x @ (game.activations[:, b] * game.payoffs[:, b])
        actions[m], mixed[m], nat[m] = a, x, b
        pay[m], wts[m], wpay[m], act[m], apay[m] = g, w, wg, c, cg
        h.n = m + 1
        h.payoff_sum = h.payoff_sum + g
        h.weight_sum += w
        h.weighted_sum = h.weighted_sum + wg
        h.activation_sum = h.activation_sum + c
        h.activated_sum = h.activated_sum + cg
        if a >= 0:
            h.action_counts[a] += 1
        h.nature_counts[b] += 1
        h.last_action, h.last_mixed, h.last_nature, h.last_payoff = a, x, b, g
        player.observe(h)
    return Transcript(mode, seed, game, actions, mixed, nat, pay, wts, wpay, act, apay,
                      h.payoff_sum.copy())


def metric_series(transcript: Transcript, target: ConvexTarget,
                  averaging: str = "cesaro") -> np.ndarray:
    """Distance from the running average to ``target`` after each stage."""
    avgs = transcript.averages(averaging)
    return np.array([target.project(z)[1] for z in avgs])


def blackwell_slack(transcript: Transcript, target: ConvexTarget) -> np.ndarray:
    """``eps_n = <avg_n - pi_n, g_{n+1} - pi_n>`` for ``n = 1 .. N-1`` (expected mode)."""
    if transcript.mode != "expected":
        raise ValueError("Blackwell slack needs an expected-mode transcript")
    avgs = transcript.cesaro_averages()
    out = np.empty(transcript.n - 1)
    for n in range(1, transcript.n):
        z = avgs[n - 1]
        pi, _ = target.project(z)
        out[n - 1] = float(np.dot(z - pi, transcript.payoffs[n] - pi))
    return out


# ---------------------------------------------------------------------------
# Monte Carlo


def thread_count() -> int:
    raw = os.environ.get("APPROACHLAB_THREADS", "")
    try:
        k = int(raw)
    except ValueError:
        k = 1
    return max(1, k)


@dataclass
class ExperimentSpec:
    """A family of episodes indexed by seed.

    ``build(seed)`` returns ``(game, player, nature)`` and ``metric(transcript)``
    a per-stage series of length ``n``.
    """

    build: Callable[[int], tuple]
    metric: Callable[[Transcript], np.ndarray]
    n: int
    trials: int
    base_seed: int = 0
    mode: str = "sampled"


@dataclass
class MonteCarloResult:
    mean: np.ndarray
    std: np.ndarray
    max: np.ndarray
    per_trial: np.ndarray

    @property
    def stderr(self) -> np.ndarray:
        return self.std / math.sqrt(self.per_trial.shape[0])


def aggregate(series: np.ndarray) -> MonteCarloResult:
    """Mean, sample std and max across trials of a ``(trials, n)`` array."""
    series = np.atleast_2d(np.asarray(series, dtype=float))
    ddof = 1 if series.shape[0] > 1 else 0
    return MonteCarloResult(series.mean(axis=0), series.std(axis=0, ddof=ddof),
                            series.max(axis=0), series)


def monte_carlo(spec: ExperimentSpec) -> MonteCarloResult:
    """Run ``spec.trials`` episodes with seeds ``base_seed + i`` and aggregate."""

    def one(i):
        seed = spec.base_seed + i
        try:
            game, player, nature = spec.build(seed)
            t = run_episode(game, player, nature, spec.n, seed, spec.mode)
            return np.asarray(spec.metric(t), dtype=float)
        except Exception as exc:
            raise RuntimeError(f"episode with seed {seed} failed: {exc}") from exc

    k = thread_count()
    if k == 1:
        rows = [one(i) for i in range(spec.trials)]
    else:
        with ThreadPoolExecutor(max_workers=k) as pool:
            rows = list(pool.map(one, range(spec.trials)))
    return aggregate(np.vstack(rows))


def coin_game() -> VectorGame:
    """One-dimensional game whose payoff is Nature's fair coin, +1 or -1."""
    return VectorGame(np.array([[[1.0], [-1.0]]]))
