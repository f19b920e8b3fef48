import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from approachlab.calibration import (
    CalibTranscript,
    ForecastState,
    FosterState,
    borel_doubling_schedule,
    calib_score,
    cell_statistics,
    eps_calibration_score_1d,
    eps_forecaster_step,
    foster_step,
    frequency_forecaster_vs_oakes_dawid,
    grid_forecaster_step,
    iid_outcomes,
    least_expected_outcome,
    make_regular_grid,
    neighbor_mask,
    oakes_dawid_next,
    run_forecaster,
    run_foster,
    score_from_stats,
    to_full,
    to_reduced,
    triangulation_round,
)
from approachlab.geometry import Grid
from approachlab.invariant import balance_residual


def _transcript(cells, outcomes, grid, n_outcomes=2):
    cells = np.asarray(cells)
    return CalibTranscript(n_outcomes, cells, grid.points[cells], np.asarray(outcomes))


def test_regular_grid_examples():
    np.testing.assert_allclose(make_regular_grid(1, 0.25).points.ravel(), [0.0, 0.5, 1.0])
    g = make_regular_grid(3, 0.99)
    assert len(g) == 4  # a step of one: the corners of the reduced simplex
    assert len(make_regular_grid(2, 1.0)) == 1


@pytest.mark.parametrize("d,eps", [(1, 0.05), (2, 0.15), (2, 0.1), (3, 0.2)])
def test_regular_grid_covers(d, eps, rng):
    g = make_regular_grid(d, eps)
    assert np.all(g.points >= -1e-12) and np.all(g.points.sum(axis=1) <= 1 + 1e-9)
    Q = rng.dirichlet(np.ones(d + 1), 1000)[:, 1:]
    dist = np.sqrt(((Q[:, None, :] - g.points[None]) ** 2).sum(-1)).min(axis=1)
    assert dist.max() <= eps + 1e-12


def test_neighbour_count_interior():
    g = make_regular_grid(2, 0.1)
    mask = neighbor_mask(g)
    interior = [i for i, c in enumerate(g.lattice) if c.min() > 0 and c.sum() < 1 / g.step - 1]
    assert interior and all(mask[i].sum() == 4 for i in interior)


def test_reduced_coordinates_round_trip():
    p = np.array([0.2, 0.5, 0.3])
    np.testing.assert_allclose(to_full(to_reduced(p)), p)


def test_calib_score_examples():
    g = make_regular_grid(1, 0.25)
    t = _transcript([1] * 10, [0, 1] * 5, g)
    assert calib_score(t, g) == pytest.approx(0.0, abs=1e-12)
    t = _transcript([0] * 6, [1] * 6, g)
    assert calib_score(t, g) == pytest.approx(1.0)
    g2 = Grid(np.array([[0.0], [1.0]]), nu=[1.0, 0.0])
    t = _transcript([0] * 4, [1] * 4, g2)
    assert calib_score(t, g2, squared=True, weighted=True) == pytest.approx(0.0, abs=1e-12)


@given(st.integers(1, 60), st.integers(0, 2**31))
def test_score_expansion_identity(n, seed):
    rng = np.random.default_rng(seed)
    g = make_regular_grid(2, 0.2)
    L = len(g)
    cells = rng.integers(0, L, n)
    outs = rng.integers(0, 3, n)
    t = CalibTranscript(3, cells, g.points[cells], outs)
    V = t.outcome_vectors()
    N, S = cell_statistics(cells, V, L)
    for l in np.nonzero(N)[0]:
        W = V[cells == l]
        wbar = S[l] / N[l]
        for k in range(L):
            lhs = np.mean(((W - g.points[l]) ** 2).sum(1) - ((W - g.points[k]) ** 2).sum(1))
            rhs = ((wbar - g.points[l]) ** 2).sum() - ((wbar - g.points[k]) ** 2).sum()
            assert lhs == pytest.approx(rhs, abs=1e-9)


def test_grid_forecaster_examples():
    g = make_regular_grid(1, 0.25)
    s = ForecastState(g, 2)
    np.testing.assert_allclose(grid_forecaster_step(s), [1 / 3] * 3)
    s.record(0, 1)
    lam = grid_forecaster_step(s)
    assert lam[0] <= 1e-6
    sym = ForecastState(g, 2)
    sym.record(1, 0)
    sym.record(1, 1)
    np.testing.assert_allclose(grid_forecaster_step(sym), [1 / 3] * 3, atol=1e-12)


def test_grid_forecaster_balance(rng):
    g = make_regular_grid(2, 0.2)
    s = ForecastState(g, 3)
    for _ in range(40):
        s.record(int(rng.integers(len(g))), int(rng.integers(3)))
    lam = grid_forecaster_step(s)
    L = len(g)
    M = np.zeros((L, L))
    sq = (g.points ** 2).sum(1)
    for l in range(L):
        for k in range(L):
            if s.N[l] and k != l:
                r = 2 * s.S[l] @ (g.points[k] - g.points[l]) - s.N[l] * (sq[k] - sq[l])
                M[l, k] = max(r, 0) / s.n
    assert balance_residual(M, lam) <= 1e-8


def test_eps_forecaster_examples():
    g = make_regular_grid(1, 0.25)
    s = ForecastState(g, 2)
    np.testing.assert_allclose(eps_forecaster_step(s), [1 / 3] * 3)
    s.record(0, 1)
    # regret flows from cell 0 to its neighbour only
    assert eps_forecaster_step(s)[0] <= 1e-6


def test_oakes_dawid_rule():
    assert oakes_dawid_next(0.7) == 0
    assert oakes_dawid_next(0.3) == 1
    assert oakes_dawid_next(0.5) == 0


def test_frequency_forecaster_is_miscalibrated():
    preds, outs = frequency_forecaster_vs_oakes_dawid(10000)
    assert eps_calibration_score_1d(preds, outs, 0.1) >= 0.05


def test_eps_score_1d_matches_brute_force(rng):
    preds = np.round(rng.random(40), 2)
    outs = (rng.random(40) < 0.5).astype(float)
    eps = 0.1
    best = -np.inf
    for p in np.linspace(-0.2, 1.2, 14001):
        sel = np.abs(preds - p) <= eps + 1e-12
        if sel.any():
            best = max(best, sel.mean() * (abs(preds[sel].mean() - outs[sel].mean()) - eps))
    assert eps_calibration_score_1d(preds, outs, eps) == pytest.approx(best, abs=1e-9)


def test_triangulation_examples(rng):
    g = make_regular_grid(1, 0.25)
    idx, w = triangulation_round([0.5], g)
    assert list(idx) == [1] and w[0] == pytest.approx(1.0)
    idx, w = triangulation_round([0.3], g)
    weights = dict(zip(idx.tolist(), w.tolist()))
    assert weights[0] == pytest.approx(0.4) and weights[1] == pytest.approx(0.6)


@pytest.mark.parametrize("d,eps", [(1, 0.1), (2, 0.15), (3, 0.3)])
def test_triangulation_barycentric(d, eps, rng):
    g = make_regular_grid(d, eps)
    for _ in range(1000 if d == 1 else 200):
        q = rng.dirichlet(np.ones(d + 1))[1:]
        idx, w = triangulation_round(q, g)
        assert w.sum() == pytest.approx(1.0) and np.all(w >= 0)
        np.testing.assert_allclose(w @ g.points[idx], q, atol=1e-9)
        spread = np.abs(g.points[idx][:, None] - g.points[idx][None]).max()
        assert spread <= g.step + 1e-9


def test_borel_schedule():
    sched = borel_doubling_schedule(1, 5)
    assert sched[3][0] == pytest.approx(0.5)
    assert [b for _, b in sched] == [1, 2, 4, 8, 16]
    eps = [e for e, _ in sched]
    assert all(a > b for a, b in zip(eps, eps[1:]))


def test_foster_examples():
    s = FosterState(0.125)
    np.testing.assert_array_equal(foster_step(s), np.eye(4)[0])
    assert s.probes <= math.ceil(math.log2(4)) + 1
    s8 = FosterState(1 / 16)
    s8.record(3, 1)
    s8.record(5, 0)
    foster_step(s8)
    assert s8.probes <= 4
    with pytest.raises(ValueError):
        FosterState(0.3)


def test_foster_mixing_weights():
    # e = 0.2 in the cell below l*, d = 0.3 in l*: mass on l* is e / (e + d)
    s = FosterState(0.25)  # cells centred at 0.25 and 0.75
    s.N[:] = [2, 8]
    s.n = 10
    s.S[:] = [2 * (0.5 + 0.2 * 10 / 2), 8 * (0.5 - 0.3 * 10 / 8)]
    assert s.excess(0)[0] == pytest.approx(0.2)
    assert s.excess(1)[1] == pytest.approx(0.3)
    np.testing.assert_allclose(foster_step(s), [0.6, 0.4])


@pytest.mark.parametrize("nature", ["oakes-dawid", "iid", "alternating"])
def test_foster_run_converges(nature):
    run = run_foster(0.05, 10000, nature, seed=1)
    assert run.max_excess <= 0.05
    assert run.max_probes <= math.ceil(math.log2(10)) + 1


def test_run_forecaster_adversaries():
    g = make_regular_grid(1, 0.1)
    for nature in (iid_outcomes([0.3, 0.7]), least_expected_outcome(g)):
        t = run_forecaster(grid_forecaster_step, g, 2, nature, 400, 0)
        assert calib_score(t, g, squared=True) <= 6 * math.sqrt(math.log(len(g)) / 400)


def test_transcript_csv(tmp_path):
    g = make_regular_grid(2, 0.3)
    t = run_forecaster(grid_forecaster_step, g, 3, iid_outcomes([0.2, 0.3, 0.5]), 20, 0)
    t.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "stage,cell,prediction_coords,outcome" and len(lines) == 21
    N, S = cell_statistics(t.cells, t.outcome_vectors(), len(g))
    assert N.sum() == 20
    assert score_from_stats(N, S, 20, g) == pytest.approx(calib_score(t, g))
