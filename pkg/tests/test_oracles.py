import numpy as np
import pytest

from approachlab.oracles import (
    CHECKS,
    game_value_reference,
    invariant_reference,
    polytope_project_reference,
    simplex_project_reference,
)


@pytest.mark.parametrize("name", sorted(CHECKS))
def test_production_matches_reference(name):
    assert CHECKS[name](200, seed=7) <= 1e-7


def test_references_on_known_cases():
    np.testing.assert_allclose(simplex_project_reference([1.5, -0.5]), [1.0, 0.0])
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(polytope_project_reference([2.0, 3.0], A, [1.0, 1.0]), [1, 1])
    assert game_value_reference([[3.0, 0.0], [1.0, 2.0]]) == pytest.approx(1.5)
    np.testing.assert_allclose(invariant_reference([[0, 2], [1, 0]]), [1 / 3, 2 / 3])
