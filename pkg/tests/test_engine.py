import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from approachlab.engine import (
    ExperimentSpec,
    FixedNature,
    FixedStrategy,
    Nature,
    ScriptedNature,
    SequenceNature,
    Strategy,
    VectorGame,
    aggregate,
    blackwell_slack,
    coin_game,
    metric_series,
    monte_carlo,
    read_transcript_csv,
    run_episode,
    thread_count,
)
from approachlab.geometry import Box
from approachlab.kernels import (
    ALGO_RM,
    NATURE_IID,
    checkpoint_array,
    regret_episode_kernel,
)
from approachlab.regret import RegretMatchingPlayer, SwapFamily, external_regret_game


class MixedNature(Nature):
    def __init__(self, y):
        self.y = np.asarray(y, dtype=float)

    def next(self, history, x):
        return self.y


def _random_game(rng, A=3, B=2, d=2, weights=False):
    g = rng.normal(size=(A, B, d))
    w = rng.uniform(0.2, 1.0, (A, B)) if weights else None
    return VectorGame(g, weights=w)


def test_single_stage_deterministic():
    game = VectorGame(np.arange(8.0).reshape(2, 2, 2))
    t = run_episode(game, FixedStrategy([0.0, 1.0]), FixedNature(0), 1, seed=3)
    np.testing.assert_array_equal(t.cesaro_averages()[0], game.payoffs[1, 0])


def test_same_seed_bitwise_equal(rng):
    game = _random_game(rng)
    runs = [run_episode(game, FixedStrategy([0.2, 0.3, 0.5]), MixedNature([0.4, 0.6]), 50, 7)
            for _ in range(2)]
    for f in ("actions", "nature_actions", "payoffs", "payoff_sum"):
        np.testing.assert_array_equal(getattr(runs[0], f), getattr(runs[1], f))


def test_invalid_strategy_names_stage():
    class Bad(Strategy):
        def next(self, history):
            return np.array([0.7, 0.7]) if history.n == 2 else np.array([1.0, 0.0])

    game = VectorGame(np.zeros((2, 1, 1)))
    with pytest.raises(ValueError, match="stage 3"):
        run_episode(game, Bad(), FixedNature(0), 5, 0)


def test_invalid_game_rejected():
    with pytest.raises(ValueError):
        VectorGame(np.zeros((0, 2, 1)))
    with pytest.raises(ValueError):
        VectorGame(np.zeros((2, 2, 1)), weights=np.full((2, 2), 1.5))
    with pytest.raises(ValueError):
        VectorGame(np.zeros((2, 2, 1)), activations=np.full((2, 2, 1), 0.5))


def test_metric_series_examples():
    c = np.array([0.5, -0.2])
    game = VectorGame(np.tile(c, (1, 1, 1)))
    t = run_episode(game, FixedStrategy([1.0]), FixedNature(0), 10, 0)
    assert np.all(metric_series(t, Box([0, -1], [1, 0])) == 0)
    outside = Box([1, 1], [2, 2])
    np.testing.assert_allclose(metric_series(t, outside), outside.distance(c))
    alt = run_episode(coin_game(), FixedStrategy([1.0]), SequenceNature([0, 1] * 5), 10, 0)
    series = metric_series(alt, Box([0.0], [0.0]))
    assert np.all(series[1::2] == 0)


def test_blackwell_slack_positive_for_bad_player():
    game = VectorGame(np.array([[[0.0], [1.0]], [[0.0], [1.0]]]))
    t = run_episode(game, FixedStrategy([0.5, 0.5]), FixedNature(1), 20, 0, "expected")
    assert blackwell_slack(t, Box([0.0], [0.0])).max() > 0
    sampled = run_episode(game, FixedStrategy([0.5, 0.5]), FixedNature(1), 5, 0)
    with pytest.raises(ValueError):
        blackwell_slack(sampled, Box([0.0], [0.0]))


def test_slack_zero_inside_target():
    game = VectorGame(np.array([[[0.1], [0.2]]]))
    t = run_episode(game, FixedStrategy([1.0]), SequenceNature([0, 1, 0, 1]), 4, 0, "expected")
    np.testing.assert_array_equal(blackwell_slack(t, Box([-1.0], [1.0])), 0.0)


def test_expected_mode_consumes_no_randomness(rng):
    game = _random_game(rng)
    runs = [run_episode(game, FixedStrategy([0.2, 0.3, 0.5]),
                        ScriptedNature(lambda h: h.n % 2), 30, seed, "expected")
            for seed in (1, 2)]
    np.testing.assert_array_equal(runs[0].payoffs, runs[1].payoffs)


@given(st.integers(0, 2**31), st.integers(1, 60))
def test_averages_consistent(seed, n):
    rng = np.random.default_rng(seed)
    game = _random_game(rng)
    t = run_episode(game, FixedStrategy([0.2, 0.3, 0.5]), MixedNature([0.5, 0.5]), n, seed)
    np.testing.assert_array_equal(t.weighted_averages(), t.cesaro_averages())
    np.testing.assert_array_equal(t.activated_averages(), t.cesaro_averages())
    acc = np.zeros(game.dim)
    for g in t.payoffs:
        acc = acc + g
    np.testing.assert_array_equal(acc, t.payoff_sum)


def test_weighted_average_is_ratio(rng):
    game = _random_game(rng, weights=True)
    t = run_episode(game, FixedStrategy([0.2, 0.3, 0.5]), MixedNature([0.5, 0.5]), 40, 1)
    w = game.weights[t.actions, t.nature_actions]
    g = game.payoffs[t.actions, t.nature_actions]
    np.testing.assert_allclose(t.weighted_averages()[-1], (w[:, None] * g).sum(0) / w.sum())


def test_transcript_csv_round_trip(tmp_path, rng):
    game = _random_game(rng)
    t = run_episode(game, FixedStrategy([0.2, 0.3, 0.5]), MixedNature([0.5, 0.5]), 25, 4)
    path = t.to_csv(tmp_path / "t.csv")
    header = path.read_text().splitlines()[0]
    assert header == "stage,player_action,nature_action,payoff_0,payoff_1,weight"
    a, b, g, w = read_transcript_csv(path)
    np.testing.assert_array_equal(a, t.actions)
    np.testing.assert_array_equal(b, t.nature_actions)
    np.testing.assert_array_equal(g, t.payoffs)
    meta = json.loads((tmp_path / "t.csv.json").read_text())
    assert meta["seed"] == 4 and meta["game_hash"] == game.fingerprint()


def test_monte_carlo_aggregation():
    single = aggregate(np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(single.mean, [1.0, 2.0, 3.0])
    flat = aggregate(np.ones((5, 3)))
    np.testing.assert_array_equal(flat.std, 0.0)


def test_lln_coin_game():
    spec = ExperimentSpec(
        build=lambda s: (coin_game(), FixedStrategy([1.0]), MixedNature([0.5, 0.5])),
        metric=lambda t: (t.cesaro_averages()[:, 0]) ** 2, n=100, trials=1000)
    res = monte_carlo(spec)
    assert abs(res.mean[-1] - 0.01) <= 3 * res.stderr[-1]


def test_thread_count(monkeypatch):
    monkeypatch.setenv("APPROACHLAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("APPROACHLAB_THREADS", "nonsense")
    assert thread_count() == 1


def test_monte_carlo_threads_match_serial(monkeypatch, rng):
    game = _random_game(rng)
    spec = ExperimentSpec(
        build=lambda s: (game, FixedStrategy([0.2, 0.3, 0.5]), MixedNature([0.3, 0.7])),
        metric=lambda t: t.cesaro_averages()[:, 0], n=20, trials=12)
    monkeypatch.setenv("APPROACHLAB_THREADS", "1")
    serial = monte_carlo(spec)
    monkeypatch.setenv("APPROACHLAB_THREADS", "4")
    threaded = monte_carlo(spec)
    np.testing.assert_array_equal(serial.per_trial, threaded.per_trial)


def test_engine_matches_compiled_kernel(rng):
    rho = rng.random((3, 4))
    probs = np.array([0.1, 0.2, 0.3, 0.4])
    n, seed = 300, 11
    t = run_episode(external_regret_game(rho), RegretMatchingPlayer(rho),
                    MixedNature(probs), n, seed)
    u = np.random.default_rng(seed).random((n, 2))
    maps = SwapFamily.external(3).maps
    out_r, _, _ = regret_episode_kernel(rho, ALGO_RM, NATURE_IID, probs, maps, u,
                                        checkpoint_array([n]))
    np.testing.assert_allclose(out_r[0], t.payoff_sum, atol=1e-9)
