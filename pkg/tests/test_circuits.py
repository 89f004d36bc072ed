import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from llsip import numkit
from llsip.circuits import (FundamentalGraph, KappaEstimates, circuit_through_pair, enumerate_circuits_bruteforce,
                            find_circuits, fundamental_circuit, kappa_bruteforce, kappa_measure, make_circuit)
from llsip.errors import IndependentColumn, SeparatedPair, TooLarge
from llsip.imbalance import kappa_star_bruteforce
from oracles import exact_circuits, exact_kappa
from conftest import F1, F2, F3, random_full_rank


def test_find_circuits_f3():
    comps, circs, kappa = find_circuits(F3)
    assert comps == [(0, 1, 2)]
    assert len(circs) == 1 and circs[0].support == (0, 1, 2)
    assert np.allclose(circs[0].g, [1, -1, 1])
    assert all(v == pytest.approx(1.0) for v in kappa.values.values())
    assert len(kappa) == 6


def test_find_circuits_f2():
    comps, circs, kappa = find_circuits(F2)
    assert np.allclose(circs[0].g, [1, -0.5])
    assert kappa[(0, 1)] == pytest.approx(0.5)
    assert kappa[(1, 0)] == pytest.approx(2.0)


def test_find_circuits_free_matroid():
    comps, circs, kappa = find_circuits(np.eye(2))
    assert comps == [(0,), (1,)]
    assert circs == [] and len(kappa) == 0


def test_fundamental_circuits_examples():
    E = numkit.row_reduce(F3)
    C = fundamental_circuit(E, 2)
    assert C.support == (0, 1, 2) and np.allclose(C.g, [1, -1, 1])
    C = fundamental_circuit(numkit.row_reduce(F2), 1)
    # g = (-2, 1) before normalization
    assert np.allclose(C.g * -2, [-2, 1])
    C = fundamental_circuit(numkit.row_reduce(F1), 1)
    assert np.allclose(C.g, [1, -1])
    with pytest.raises(IndependentColumn):
        fundamental_circuit(E, 0)


def test_circuit_through_pair_examples():
    E = numkit.row_reduce(F3)
    assert circuit_through_pair(E, FundamentalGraph(F3, E), 0, 2).support == (0, 1, 2)
    E = numkit.row_reduce(F1)
    assert circuit_through_pair(E, FundamentalGraph(F1, E), 0, 1).support == (0, 1)
    A = np.array([[1.0, 1, 0, 0], [0, 0, 1, 1]])
    E = numkit.row_reduce(A)
    with pytest.raises(SeparatedPair):
        circuit_through_pair(E, FundamentalGraph(A, E), 0, 2)


def test_bruteforce_examples():
    assert [C.support for C in enumerate_circuits_bruteforce(F3)] == [(0, 1, 2)]
    assert [C.support for C in enumerate_circuits_bruteforce(F1)] == [(0, 1)]
    A = np.array([[1.0, 1, 0, 0], [0, 1, 1, 1]])
    got = sorted(C.support for C in enumerate_circuits_bruteforce(A))
    assert got == sorted(S for S, _ in exact_circuits(A))
    with pytest.raises(TooLarge):
        enumerate_circuits_bruteforce(np.ones((1, 15)))


def test_kappa_bruteforce_examples():
    k = kappa_bruteforce(F2)
    assert k[(0, 1)] == pytest.approx(0.5) and k[(1, 0)] == pytest.approx(2)
    assert kappa_measure(k) == pytest.approx(2)
    assert all(v == pytest.approx(1) for v in kappa_bruteforce(F3).values())
    assert kappa_measure(kappa_bruteforce(F1)) == pytest.approx(1)


def _corpus(seed, count, max_n=8):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        m = int(rng.integers(1, 4))
        n = int(rng.integers(m + 1, max_n + 1))
        yield random_full_rank(rng, m, n)


@pytest.mark.parametrize("A", list(_corpus(3, 40)))
def test_bruteforce_matches_exact_oracle(A):
    got = {C.support: C.g for C in enumerate_circuits_bruteforce(A)}
    ref = exact_circuits(A)
    assert set(got) == {S for S, _ in ref}
    for S, g in ref:
        assert np.allclose(got[S], [float(v) for v in g], rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("A", list(_corpus(4, 40, max_n=10)))
def test_find_circuits_laws(A):
    comps, circs, kappa = find_circuits(A)
    true = exact_kappa(A)
    n = A.shape[1]
    for C in circs:
        assert np.linalg.norm(A @ C.g) <= 1e-9 * np.linalg.norm(A) * np.linalg.norm(C.g)
        assert C.g[C.support[0]] == 1.0
    ref = {S for S, _ in exact_circuits(A)}
    assert {C.support for C in circs} <= ref
    # components: i ~ j iff some circuit contains both
    same = {(i, j) for i, j in true}
    for comp in comps:
        for i, j in itertools.permutations(comp, 2):
            assert (i, j) in same
            assert (i, j) in kappa
    kstar = kappa_star_bruteforce(true, n) if true else 1.0
    for (i, j), v in kappa.items():
        assert v <= true[(i, j)] * (1 + 1e-9)
        assert true[(i, j)] <= kstar ** 2 * v * (1 + 1e-9)
        assert v * kappa[(j, i)] >= 1 - 1e-9


@pytest.mark.parametrize("A", list(_corpus(5, 25)))
def test_triangle_inequality_and_duality(A):
    true = exact_kappa(A)
    n = A.shape[1]
    for i, j, k in itertools.permutations(range(n), 3):
        if (i, j) in true and (i, k) in true and (k, j) in true:
            assert true[(i, j)] <= true[(i, k)] * true[(k, j)] * (1 + 1e-9)
    K = numkit.kernel_basis(A)
    dual = kappa_bruteforce(K.T)
    assert set(dual) == {(j, i) for i, j in true}
    for (i, j), v in true.items():
        assert dual[(j, i)] == pytest.approx(v, rel=1e-8)


def test_kappa_estimates_monotone_and_rescaled():
    k = KappaEstimates(3)
    assert k.update(0, 1, 2.0)
    assert not k.update(0, 1, 1.0)
    assert k[(0, 1)] == 2.0
    r = k.rescaled([1.0, 4.0, 1.0])
    assert r[(0, 1)] == pytest.approx(0.5)
    assert k.copy().values == k.values


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=6).filter(lambda g: any(g)))
def test_make_circuit_normalization(g):
    C = make_circuit(g)
    assert C.g[C.support[0]] == 1.0
    assert set(C.support) == {i for i, v in enumerate(g) if v}
