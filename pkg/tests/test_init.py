import math

import numpy as np
import pytest

from llsip import numkit
from llsip.config import SolverConfig
from llsip.errors import NeighborhoodViolation, RankDeficient, SearchLimit
from llsip.init import (
    Certificate, MBtooSmall, build_extended, choose_M, initial_guess, initial_mu, initial_point,
    map_back, solve_with_m_search, two_phase_feasibility, _extended_solve,
)
from llsip.ipm import centrality_gap
from conftest import F4_A, F4_b, F4_c, feasible_lp, random_full_rank
from oracles import bfs_optimum, chibar_oracle

INFEASIBLE = (np.array([[1.0, 1.0]]), np.array([-1.0]), np.array([1.0, 0.0]))
UNBOUNDED = (np.array([[1.0, -1.0]]), np.array([0.0]), np.array([-1.0, -1.0]))


def test_build_extended_f4():
    ext = build_extended(F4_A, F4_b, F4_c, 40.0)
    assert ext.A.shape == (3, 6)
    assert np.array_equal(ext.A, [[1, 1, -1, -1, 0, 0], [1, 0, 0, 0, 1, 0], [0, 1, 0, 0, 0, 1]])
    assert np.array_equal(ext.b, [1, 80, 80])
    assert np.array_equal(ext.c, [1, 0, 40, 40, 0, 0])
    assert numkit.numerical_rank(ext.A) == 3


def test_build_extended_m_only_touches_m_entries():
    e1 = build_extended(F4_A, F4_b, F4_c, 40.0)
    e2 = build_extended(F4_A, F4_b, F4_c, 90.0)
    assert np.array_equal(e1.A, e2.A)
    assert np.array_equal(e1.b[:1], e2.b[:1]) and np.array_equal(e1.c[:2], e2.c[:2])
    assert not np.array_equal(e1.b[1:], e2.b[1:]) and not np.array_equal(e1.c[2:4], e2.c[2:4])


def test_build_extended_zero_data():
    ext = build_extended(F4_A, [0.0], [0.0, 0.0], 5.0)
    assert np.array_equal(ext.c, [0, 0, 5, 5, 0, 0])


def test_initial_point_f4():
    M = 40.0
    w = initial_point(F4_A, F4_b, F4_c, M)
    ext = build_extended(F4_A, F4_b, F4_c, M)
    assert np.allclose(ext.A @ w.x, ext.b, atol=1e-12)
    assert np.allclose(ext.A.T @ w.y + w.s, ext.c, atol=1e-12)
    assert w.mu == pytest.approx(1600.0, rel=1e-12)
    assert initial_mu(F4_A, F4_b, F4_c, M) == pytest.approx(M * M, rel=1e-12)
    # gap^2 = (||c||^2 + ||d||^2) / M^2 with the e-blocks cancelling
    assert centrality_gap(w) ** 2 == pytest.approx((1.0 + 0.5) / M ** 2, rel=1e-6)
    assert centrality_gap(w) <= 0.125


def test_initial_point_zero_data_is_central():
    w = initial_point(F4_A, [0.0], [0.0, 0.0], 3.0)
    assert centrality_gap(w) == pytest.approx(0.0, abs=1e-15)


def test_initial_point_too_small_m():
    with pytest.raises(NeighborhoodViolation):
        initial_point(F4_A, F4_b, np.array([100.0, 0.0]), 1.0)


@pytest.mark.parametrize("seed", range(30))
def test_initial_point_membership_with_true_chibar(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 3))
    n = int(rng.integers(m + 1, 6))
    A = random_full_rank(rng, m, n)
    b = rng.normal(size=m) * 5
    c = rng.normal(size=n) * 5
    chi = chibar_oracle(A)
    d = numkit.min_norm_solution(A, b)
    M = choose_M(chi, np.linalg.norm(c), np.linalg.norm(d)) * (1 + 1e-9)
    w = initial_point(A, b, c, M)
    assert centrality_gap(w) <= 0.125


def test_map_back_f4():
    ext, res = _extended_solve(F4_A, F4_b, F4_c, 40.0, SolverConfig(), 0.125)
    assert res.status == "Optimal"
    w = map_back(ext, res, F4_A, F4_b, F4_c)
    assert not isinstance(w, MBtooSmall)
    assert np.allclose(w.x, [0.0, 1.0], atol=1e-12)
    _, xl, _ = ext.split(res.iterate.x)
    assert np.all(xl == 0.0)


def test_map_back_tiny_m():
    # optimum x = (0, 1e4) lies beyond the artificial bound 2M
    A, b, c = np.array([[1.0, 1e-4]]), np.array([1.0]), np.array([1.0, 0.0])
    ext, res = _extended_solve(A, b, c, 1500.0, SolverConfig(), 0.125)
    assert res.status == "Optimal"
    assert isinstance(map_back(ext, res, A, b, c), MBtooSmall)


def test_map_back_zero_data():
    A, b, c = F4_A, np.array([0.0]), np.zeros(2)
    ext, res = _extended_solve(A, b, c, 5.0, SolverConfig(), 0.125)
    w = map_back(ext, res, A, b, c)
    assert np.allclose(w.x, 0.0, atol=1e-12)


def _check_primal_cert(A, b, y):
    scale = np.linalg.norm(y) * np.linalg.norm(A, 2)
    return np.all(A.T @ y <= 1e-8 * scale) and b @ y > 1e-8 * np.linalg.norm(y) * np.linalg.norm(b)


def _check_dual_cert(A, c, x):
    nx = np.linalg.norm(x)
    return (np.linalg.norm(A @ x) <= 1e-8 * np.linalg.norm(A, 2) * nx and x.min() >= -1e-8 * nx
            and c @ x < -1e-8 * np.linalg.norm(c) * nx)


def test_two_phase_primal_infeasible():
    A, b, c = INFEASIBLE
    cert = two_phase_feasibility(A, b, c, 100.0)
    assert isinstance(cert, Certificate) and cert.kind == "PrimalInfeasible"
    assert _check_primal_cert(A, b, cert.witness)
    y = cert.witness / abs(cert.witness[0])
    assert np.allclose(y, [-1.0], atol=1e-9)


def test_two_phase_dual_infeasible():
    A, b, c = UNBOUNDED
    cert = two_phase_feasibility(A, b, c, 100.0)
    assert isinstance(cert, Certificate) and cert.kind == "DualInfeasible"
    assert _check_dual_cert(A, c, cert.witness)
    x = cert.witness / cert.witness[0]
    assert np.allclose(x, [1.0, 1.0], atol=1e-9)


def test_two_phase_f4_feasible():
    hist = []
    assert two_phase_feasibility(F4_A, F4_b, F4_c, 100.0, history=hist) is None
    assert [h.outcome for h in hist] == ["feasible", "feasible"]


def test_search_f4_first_guess():
    r = solve_with_m_search(F4_A, F4_b, F4_c)
    assert r.status == "Optimal"
    assert r.objective == pytest.approx(0.0, abs=1e-12)
    assert len(r.guesses) == 1
    assert r.guesses[0] >= math.sqrt(2)
    assert np.allclose(r.iterate.x, [0.0, 1.0], atol=1e-12)


def test_search_one_squaring():
    A, b, c = np.array([[1.0, 1e-4]]), np.array([1.0]), np.array([1.0, 0.0])
    assert chibar_oracle(A) == pytest.approx(math.sqrt(1 + 1e8), rel=1e-9)
    r = solve_with_m_search(A, b, c, guess=100.0)
    assert r.status == "Optimal"
    assert r.guesses == [100.0, 1e4]
    assert np.allclose(r.iterate.x, [0.0, 1e4], rtol=1e-9)


def test_search_infeasible_stops_in_phase_one():
    A, b, c = INFEASIBLE
    r = solve_with_m_search(A, b, c)
    assert r.status == "PrimalInfeasible"
    assert [h.phase for h in r.history] == ["phase1"]


def test_search_dual_infeasible():
    r = solve_with_m_search(*UNBOUNDED)
    assert r.status == "DualInfeasible"


def test_search_rank_deficient():
    with pytest.raises(RankDeficient):
        solve_with_m_search(np.array([[1.0, 1.0], [2.0, 2.0]]), [1.0, 2.0], [1.0, 0.0])


def test_search_big_m_too_small():
    A, b, c = np.array([[1.0, 1e-4]]), np.array([1.0]), np.array([1.0, 0.0])
    with pytest.raises(SearchLimit):
        solve_with_m_search(A, b, c, big_m=1500.0)


def test_initial_guess_floor():
    assert initial_guess(F4_A) == 100.0


@pytest.mark.parametrize("seed", range(12))
def test_search_matches_bfs_oracle(seed):
    rng = np.random.default_rng(seed)
    A, b, c = feasible_lp(rng, int(rng.integers(1, 3)), int(rng.integers(3, 6)))
    r = solve_with_m_search(A, b, c)
    opt = bfs_optimum(A, b, c)
    assert r.status == "Optimal"
    assert r.objective == pytest.approx(opt, rel=1e-7, abs=1e-7)


@pytest.mark.parametrize("seed", range(12))
def test_true_chibar_m_never_too_small(seed):
    rng = np.random.default_rng(50 + seed)
    A, b, c = feasible_lp(rng, int(rng.integers(1, 3)), int(rng.integers(3, 6)))
    chi = chibar_oracle(A)
    d = numkit.min_norm_solution(A, b)
    M = choose_M(chi, np.linalg.norm(c), np.linalg.norm(d))
    ext, res = _extended_solve(A, b, c, M, SolverConfig(), 0.125)
    assert res.status == "Optimal"
    assert not isinstance(map_back(ext, res, A, b, c), MBtooSmall)
