import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from approachlab.errors import NumericalError
from approachlab.invariant import balance_residual, invariant_measure, stationary
from approachlab.oracles import invariant_reference


def test_invariant_examples():
    np.testing.assert_allclose(invariant_measure([[0, 1], [1, 0]]), [0.5, 0.5])
    np.testing.assert_allclose(invariant_measure([[0, 2], [1, 0]]), [1 / 3, 2 / 3])
    np.testing.assert_allclose(invariant_measure(np.eye(3)), [1 / 3] * 3)
    np.testing.assert_allclose(invariant_measure(np.zeros((4, 4))), [0.25] * 4)


def test_stationary_examples():
    P = np.array([[0.2, 0.8], [0.8, 0.2]])
    np.testing.assert_allclose(stationary(P), [0.5, 0.5])
    np.testing.assert_allclose(stationary([[1, 0], [1, 0]]), [1.0, 0.0])
    np.testing.assert_allclose(stationary(np.eye(3)), [1 / 3] * 3)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        invariant_measure([[0, -1], [1, 0]])
    with pytest.raises(ValueError):
        stationary([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(ValueError):
        invariant_measure(np.zeros((2, 3)))


def test_nonconvergence_reports_residual():
    # a cap of one iteration cannot reach a tolerance of zero on a nontrivial chain
    M = np.array([[0.0, 1.0, 0.3], [0.2, 0.0, 1.0], [1.0, 0.5, 0.0]])
    try:
        invariant_measure(M, tol=-1.0, max_iter=1)
    except NumericalError as err:
        assert err.residual >= 0
    else:
        pytest.fail("expected a NumericalError")


def _reachable(P):
    R = (P > 0) | np.eye(len(P), dtype=bool)
    for _ in range(len(P)):
        R = R | ((R.astype(int) @ R.astype(int)) > 0)
    return R


@given(st.integers(1, 8), st.floats(0.2, 1.0), st.integers(0, 2**31))
def test_balance_equations(A, density, seed):
    rng = np.random.default_rng(seed)
    M = rng.random((A, A)) * (rng.random((A, A)) < density) * 10 ** rng.uniform(-3, 3)
    lam = invariant_measure(M)
    assert np.all(lam >= 0) and abs(lam.sum() - 1) <= 1e-9
    assert balance_residual(M, lam) <= 1e-8 * max(1.0, M.sum(axis=1).max())


@given(st.integers(1, 4), st.floats(0.2, 1.0), st.integers(0, 2**31))
def test_matches_reference_and_null_space(A, density, seed):
    from scipy.linalg import null_space

    rng = np.random.default_rng(seed)
    M = rng.random((A, A)) * (rng.random((A, A)) < density)
    lam = invariant_measure(M)
    np.testing.assert_allclose(lam, invariant_reference(M), atol=1e-7)
    # uniqueness when the chain is irreducible: compare against the null space
    off = M - np.diag(np.diag(M))
    if _reachable(off).all():
        K = null_space((off - np.diag(off.sum(axis=1))).T)
        assert K.shape[1] == 1
        ref = K[:, 0] / K[:, 0].sum()
        np.testing.assert_allclose(lam, ref, atol=1e-7)


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_stationary_fixed_point(A, seed):
    rng = np.random.default_rng(seed)
    P = rng.random((A, A)) * (rng.random((A, A)) < 0.6)
    P[np.arange(A), rng.integers(0, A, A)] += 0.1
    P /= P.sum(axis=1, keepdims=True)
    lam = stationary(P)
    assert np.abs(lam @ P - lam).max() <= 1e-8
