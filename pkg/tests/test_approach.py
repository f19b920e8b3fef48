import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from approachlab.approach import (
    WEAK_GAME,
    ApproachConfig,
    BlackwellStrategy,
    PotentialLinfStrategy,
    PotentialState,
    activation_bound_factor,
    blackwell_step,
    box_transform,
    check_approachable,
    hull_target_norm,
    lift_activation,
    lift_weighted,
    potential_eta,
    potential_linf_step,
    potential_weights_kernel,
    ratio_average,
    weak_approach_demo,
    weak_target_distance,
)
from approachlab.engine import (
    FixedNature,
    FixedStrategy,
    Nature,
    ScriptedNature,
    SequenceNature,
    VectorGame,
    blackwell_slack,
    run_episode,
)
from approachlab.geometry import Ball, Box, HalfspaceIntersection, negative_orthant
from approachlab.regret import external_regret_game


class RandomNature(Nature):
    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def next(self, history, x):
        return int(self.rng.integers(0, 2))


def test_external_regret_orthant_is_approachable(rng):
    game = external_regret_game(rng.random((3, 3)))
    assert check_approachable(game, negative_orthant(3)).delta_hat <= 1e-6


def test_weak_segment_is_not_approachable():
    game = VectorGame(WEAK_GAME)
    assert check_approachable(game, Box([0.5, 0.0], [0.5, 0.25])).delta_hat > 0.1


def test_large_ball_is_trivially_approachable(rng):
    game = VectorGame(rng.normal(size=(3, 2, 2)))
    check = check_approachable(game, Ball(np.zeros(2), game.norm_inf()))
    assert check.delta_hat == 0.0


def test_step_at_target_uses_fallback():
    game = VectorGame(np.array([[[1.0]], [[-1.0]]]))
    cfg = ApproachConfig(game, Box([-1.0], [1.0]), fallback=[0.25, 0.75])
    np.testing.assert_array_equal(blackwell_step(cfg, [0.3]), [0.25, 0.75])


def test_step_regret_game_matches_regret_matching():
    rho = np.array([[0.9, 0.1], [0.2, 0.5], [0.4, 0.6]])
    cfg = ApproachConfig(external_regret_game(rho), negative_orthant(3))
    x = blackwell_step(cfg, [0.2, -0.1, 0.3])
    game = cfg.game
    # any optimal answer satisfies the Blackwell condition; x proportional to r+ does
    r_pos = np.array([0.2, 0.0, 0.3])
    for b in range(2):
        assert (x @ game.payoffs[:, b]) @ r_pos <= 1e-9
    np.testing.assert_allclose(r_pos / r_pos.sum(), [0.4, 0.0, 0.6])


def test_step_sign_in_one_dimension():
    game = VectorGame(np.array([[[-1.0]], [[1.0]]]))
    cfg = ApproachConfig(game, Box([0.0], [0.0]))
    np.testing.assert_allclose(blackwell_step(cfg, [0.5]), [1.0, 0.0])


def test_config_dimension_mismatch():
    with pytest.raises(ValueError):
        ApproachConfig(VectorGame(np.zeros((2, 2, 2))), Box([0.0], [1.0]))


@pytest.mark.parametrize("seed", range(5))
def test_blackwell_slack_nonpositive_on_approachable_target(seed):
    rng = np.random.default_rng(seed)
    game = external_regret_game(rng.random((3, 2)))
    cfg = ApproachConfig(game, negative_orthant(3))
    t = run_episode(game, BlackwellStrategy(cfg), ScriptedNature(lambda h: h.n % 2), 200, seed,
                    "expected")
    assert blackwell_slack(t, cfg.target).max() <= 1e-7


def test_restricted_target_kappa(rng):
    game = VectorGame(rng.uniform(-1, 1, size=(3, 3, 2)))
    target = HalfspaceIntersection(np.array([[1.0, 0.0]]), np.array([0.0]), np.array([-1.0, 0.0]))
    cfg = ApproachConfig(game, target, restrict_to_hull=True)
    # norm bound over the restricted target is at most the payoff bound
    assert hull_target_norm(game, target) <= game.norm_inf() + 1e-12
    assert cfg.kappa() <= (2 * game.norm_inf()) ** 2 + 1e-12


def test_potential_weights():
    np.testing.assert_allclose(potential_weights_kernel(np.zeros(4), 0.7), [0.25] * 4)
    w = potential_weights_kernel(np.array([0.0, 10.0]), 1.0)
    np.testing.assert_allclose(w, [4.54e-5, 0.99995], rtol=1e-3)


def test_potential_schedule():
    state = PotentialState(4)
    assert state.eta == pytest.approx(math.sqrt(math.log(4)))
    for _ in range(3):
        state.advance(np.ones(4))
    # blocks of length 1 and 2 are complete, the third block starts empty
    assert state.block == 2 and state.in_block == 0
    np.testing.assert_array_equal(state.G, 0.0)
    assert state.eta == pytest.approx(potential_eta(4, 4))


def test_potential_step_is_mixed_action(rng):
    game = VectorGame(rng.uniform(-1, 1, (3, 2, 2)))
    H = box_transform(game, Box([-0.5, -0.5], [0.5, 0.5]))
    x = potential_linf_step(PotentialState(4, rng.normal(size=4)), H)
    assert np.all(x >= -1e-12) and x.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        box_transform(game, negative_orthant(2))


def test_potential_strategy_approaches_box():
    game = VectorGame(np.array([[[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]]))
    box = Box([0.4, 0.4], [0.6, 0.6])
    t = run_episode(game, PotentialLinfStrategy(game, box), SequenceNature([0, 1] * 500), 1000, 3)
    assert box.distance(t.payoff_sum / t.n) < 0.1


def test_weighted_lift_identity_weights(rng):
    game = VectorGame(rng.normal(size=(2, 2, 2)))
    lifted, cone, consts = lift_weighted(game, Box([-1, -1], [1, 1]))
    t = run_episode(lifted, FixedStrategy([0.5, 0.5]), FixedNature(1), 30, 0)
    direct = run_episode(game, FixedStrategy([0.5, 0.5]), FixedNature(1), 30, 0)
    np.testing.assert_allclose(ratio_average(t.payoff_sum / t.n), direct.cesaro_averages()[-1],
                               atol=1e-12)


def test_weighted_lift_round_trip(rng):
    game = VectorGame(rng.normal(size=(3, 2, 2)), weights=rng.uniform(0.3, 1.0, (3, 2)))
    lifted, _, _ = lift_weighted(game, Box([-1, -1], [1, 1]))
    lt = run_episode(lifted, FixedStrategy([0.2, 0.3, 0.5]), SequenceNature([0, 1, 1] * 20), 60, 5)
    dt = run_episode(game, FixedStrategy([0.2, 0.3, 0.5]), SequenceNature([0, 1, 1] * 20), 60, 5)
    np.testing.assert_allclose(ratio_average(lt.payoff_sum / lt.n), dt.weighted_averages()[-1],
                               atol=1e-9)


@given(st.integers(0, 2**31))
def test_weighted_lift_distance_comparison(seed):
    rng = np.random.default_rng(seed)
    game = VectorGame(rng.uniform(-1, 1, (3, 2, 2)), weights=rng.uniform(0.3, 1.0, (3, 2)))
    target = Box([-0.2, -0.2], [0.2, 0.2])
    lifted, cone, c = lift_weighted(game, target)
    flat = lifted.payoffs.reshape(-1, 3)
    for _ in range(20):
        z = rng.dirichlet(np.ones(len(flat))) @ flat
        d_lift = cone.distance(z)
        d_ratio = target.distance(z[:2] / z[2])
        assert d_ratio <= c["upper_factor"] * d_lift + 1e-9
        assert d_lift <= c["w_high"] * d_ratio + 1e-9


def test_weight_bounds_rejected():
    game = VectorGame(np.zeros((1, 1, 1)))
    with pytest.raises(ValueError):
        lift_weighted(game, Box([0.0], [1.0]), bounds=(0.0, 1.0))


def test_activation_lift_all_active(rng):
    game = VectorGame(rng.normal(size=(2, 2, 2)))
    lifted, cone = lift_activation(game, Box([-1, -1], [1, 1]))
    t = run_episode(lifted, FixedStrategy([0.5, 0.5]), FixedNature(0), 20, 2)
    d = run_episode(game, FixedStrategy([0.5, 0.5]), FixedNature(0), 20, 2)
    np.testing.assert_allclose(ratio_average(t.payoff_sum / t.n, "coordinatewise"),
                               d.cesaro_averages()[-1], atol=1e-12)


def test_inactive_coordinate_never_constrains():
    g = np.array([[[5.0, 0.0]], [[7.0, 0.0]]])
    chi = np.zeros_like(g)
    chi[:, :, 1] = 1.0
    game = VectorGame(g, activations=chi)
    lifted, cone = lift_activation(game, Box([-1.0, -1.0], [1.0, 1.0]))
    t = run_episode(lifted, FixedStrategy([0.5, 0.5]), FixedNature(0), 10, 0)
    assert cone.distance(t.payoff_sum / t.n) == pytest.approx(0.0, abs=1e-12)


@given(st.integers(0, 2**31))
def test_activation_distance_chain(seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(-1, 1, (3, 2, 2))
    chi = (rng.random((3, 2, 2)) < 0.7).astype(float)
    chi[0, 0] = 1.0
    game = VectorGame(g, activations=chi)
    target = Box([-0.1, -0.1], [0.1, 0.1])
    lifted, cone = lift_activation(game, target)
    t = run_episode(game, FixedStrategy([0.4, 0.3, 0.3]), RandomNature(seed), 80, seed)
    lt = run_episode(lifted, FixedStrategy([0.4, 0.3, 0.3]), RandomNature(seed), 80, seed)
    freq = t.activations.mean(axis=0)
    if np.any(freq == 0):
        return
    tilted = t.activated_averages()[-1]
    bound = activation_bound_factor(game, freq.min()) * cone.distance(lt.payoff_sum / lt.n)
    assert target.distance(tilted) <= bound + 1e-9


def test_activation_needs_box_with_origin():
    game = VectorGame(np.zeros((1, 1, 1)))
    with pytest.raises(ValueError):
        lift_activation(game, Box([0.5], [1.0]))


@pytest.mark.parametrize("nature", [FixedNature(0), FixedNature(1), RandomNature(1),
                                    SequenceNature([0, 1] * 100)])
def test_weak_demo_distance(nature):
    assert weak_approach_demo(100, nature) <= 0.01


def test_weak_demo_hand_simulation():
    assert weak_approach_demo(10, FixedNature(0)) == 0.0
    assert weak_approach_demo(10, FixedNature(1)) == 0.0
    assert weak_target_distance([0.5, 0.0]) == 0.0
    with pytest.raises(ValueError):
        weak_approach_demo(7, FixedNature(0))
