import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from approachlab.oracles import game_value_reference
from approachlab.zerosum import ScalarGame, exploitability, solve, value

matrices = st.tuples(st.integers(1, 8), st.integers(1, 8)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(-3, 3, allow_nan=False)))

PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])


def test_matching_pennies():
    v, x, y = solve(PENNIES)
    assert v == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(x, [0.5, 0.5])
    np.testing.assert_allclose(y, [0.5, 0.5])


def test_constant_game():
    v, x, y = solve([[2.5]])
    assert v == 2.5
    np.testing.assert_allclose(x, [1.0])
    np.testing.assert_allclose(y, [1.0])


def test_two_by_two_closed_form():
    v, x, y = solve([[3.0, 0.0], [1.0, 2.0]])
    assert v == pytest.approx(1.5)
    np.testing.assert_allclose(x, [0.25, 0.75], atol=1e-12)
    np.testing.assert_allclose(y, [0.5, 0.5], atol=1e-12)


def test_exploitability_examples():
    assert exploitability(PENNIES, [0.5, 0.5], [0.5, 0.5]) == pytest.approx((0.0, 0.0))
    assert exploitability(PENNIES, [1.0, 0.0], [0.5, 0.5])[0] == pytest.approx(1.0)
    C = np.full((2, 3), 0.7)
    assert exploitability(C, [1, 0], [0.2, 0.3, 0.5]) == pytest.approx((0.0, 0.0))


def test_empty_game_rejected():
    with pytest.raises(ValueError):
        ScalarGame(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        solve([[np.nan]])


@given(matrices)
def test_value_matches_lp_reference(M):
    v, x, y = solve(M)
    assert v == pytest.approx(game_value_reference(M), abs=1e-7)
    for p in (x, y):
        assert np.all(p >= -1e-12) and abs(p.sum() - 1) <= 1e-9
    assert (x @ M).min() >= v - 1e-9
    assert (M @ y).max() <= v + 1e-9


@given(matrices)
def test_value_duality(M):
    assert value(M) == pytest.approx(-value(-M.T), abs=1e-7)


def test_degenerate_games(rng):
    for _ in range(200):
        M = np.round(rng.uniform(-1, 1, (4, 4)) * 2) / 2
        assert value(M) == pytest.approx(game_value_reference(M), abs=1e-7)
