"""Circuits of the linear matroid M(A) and circuit-imbalance lower bounds.

``find_circuits`` follows the fundamental-circuit construction: after one
Gauss-Jordan elimination, a circuit through any pair of columns in the same
non-separable component comes from a minimal path in the bipartite
basis/non-basis graph, and its kernel vector is propagated along that path.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .errors import IndependentColumn, SeparatedPair, TooLarge

BRUTEFORCE_MAX_N = 14
# entries below this fraction of the cancelling terms are structural zeros
CANCEL_TOL = 1e-10


@dataclass(frozen=True)
class Circuit:
    support: tuple
    g: np.ndarray = field(compare=False, repr=False)

    def ratio(self, i: int, j: int) -> float:
        """|g_j / g_i| for i, j in the support."""
        return abs(self.g[j] / self.g[i])

    def __contains__(self, i) -> bool:
        return i in self.support


def make_circuit(g, tol: float = 0.0) -> Circuit:
    g = np.asarray(g, dtype=float).copy()
    scale = np.max(np.abs(g))
    g[np.abs(g) <= tol * scale] = 0.0
    support = tuple(int(i) for i in np.flatnonzero(g))
    if not support:
        raise ValueError("zero vector has no circuit")
    g /= g[support[0]]
    return Circuit(support, g)


class KappaEstimates:
    """Lower bounds on the circuit ratios of ordered pairs.

    Values only ever increase. Pairs in different non-separable components
    carry no value at all.
    """

    def __init__(self, n: int, component_id=None):
        self.n = n
        self.values: dict = {}
        self.witness: dict = {}
        self.component_id = list(component_id) if component_id is not None else [0] * n

    def __getitem__(self, pair) -> float:
        return self.values[pair]

    def __contains__(self, pair) -> bool:
        return pair in self.values

    def get(self, i, j, default=None):
        return self.values.get((i, j), default)

    def items(self):
        return self.values.items()

    def __len__(self):
        return len(self.values)

    def update(self, i, j, value, witness=None) -> bool:
        """Raise the bound on (i, j) to ``value``; returns True if it grew."""
        old = self.values.get((i, j))
        if old is not None and value <= old:
            return False
        self.values[(i, j)] = float(value)
        self.witness[(i, j)] = witness
        return True

    def copy(self) -> "KappaEstimates":
        other = KappaEstimates(self.n, self.component_id)
        other.values = dict(self.values)
        other.witness = dict(self.witness)
        return other

    def rescaled(self, d) -> "KappaEstimates":
        """Estimates for the instance with columns A[:, i] multiplied by d_i.

        Its kernel is Diag(d)^{-1} ker(A), so every ratio picks up d_i / d_j.
        """
        d = np.asarray(d, dtype=float)
        other = KappaEstimates(self.n, self.component_id)
        other.values = {(i, j): v * d[i] / d[j] for (i, j), v in self.values.items()}
        other.witness = dict(self.witness)
        return other

    def as_matrix(self) -> np.ndarray:
        K = np.zeros((self.n, self.n))
        for (i, j), v in self.values.items():
            K[i, j] = v
        return K


@dataclass
class CircuitFamily:
    components: list
    circuits: list
    kappa: KappaEstimates
    elimination: numkit.EliminationResult

    def __iter__(self):
        return iter((self.components, self.circuits, self.kappa))


class FundamentalGraph:
    """Bipartite graph between basis columns and non-basis columns.

    Edge (u, v) iff u belongs to the fundamental circuit C(B, v).
    """

    def __init__(self, A, elim: numkit.EliminationResult):
        A = numkit.as_matrix(A)
        self.n = A.shape[1]
        self.elim = elim
        colnorm = np.linalg.norm(A, axis=0)
        row_of = elim.row_of
        self.adj = {k: [] for k in range(self.n)}
        R = elim.reduced
        for v in elim.nonbasis:
            for u in elim.basis:
                h = R[row_of[u], v]
                # column-scaling invariant zero test on the expansion coefficient
                if h != 0.0 and abs(h) * colnorm[u] > numkit.PIVOT_TOL * colnorm[v]:
                    self.adj[u].append(v)
                    self.adj[v].append(u)
        for k in self.adj:
            self.adj[k].sort()

    def components(self) -> list:
        seen = [False] * self.n
        comps = []
        for start in range(self.n):
            if seen[start]:
                continue
            comp = []
            queue = deque([start])
            seen[start] = True
            while queue:
                u = queue.popleft()
                comp.append(u)
                for w in self.adj[u]:
                    if not seen[w]:
                        seen[w] = True
                        queue.append(w)
            comps.append(tuple(sorted(comp)))
        return comps

    def shortest_path(self, i: int, j: int):
        """BFS path from i to j, visiting neighbours in increasing index order."""
        parent = {i: None}
        queue = deque([i])
        while queue:
            u = queue.popleft()
            if u == j:
                break
            for w in self.adj[u]:
                if w not in parent:
                    parent[w] = u
                    queue.append(w)
        if j not in parent:
            return None
        path = [j]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        return path[::-1]


def fundamental_circuit(elim: numkit.EliminationResult, i: int) -> Circuit:
    """C(B, i) with g_i = 1 and g_B = -H[:, i]."""
    if i in elim.basis:
        raise IndependentColumn(f"column {i} is a basis column")
    n = elim.reduced.shape[1]
    g = np.zeros(n)
    g[i] = 1.0
    for r, u in enumerate(elim.basis):
        g[u] = -elim.reduced[r, i]
    return make_circuit(g)


def circuit_through_pair(elim: numkit.EliminationResult, graph: FundamentalGraph, i: int, j: int) -> Circuit:
    """A circuit containing both i and j, from a minimal fundamental-circuit path."""
    if i == j:
        raise ValueError("need two distinct indices")
    path = graph.shortest_path(i, j)
    if path is None:
        raise SeparatedPair(f"{i} and {j} lie in different components")
    basis = set(elim.basis)
    row_of = elim.row_of
    R = elim.reduced
    V = [k for k in path if k not in basis]
    U = [k for k in path[1:-1] if k in basis]
    n = R.shape[1]
    g = np.zeros(n)
    g[V[0]] = 1.0
    # each row u_t touches exactly v_t and v_{t+1} inside S = (B \ U) + V
    for t, u in enumerate(U):
        r = row_of[u]
        g[V[t + 1]] = -R[r, V[t]] * g[V[t]] / R[r, V[t + 1]]
    Uset = set(U)
    Vidx = np.array(V)
    for u in elim.basis:
        if u in Uset:
            continue
        terms = R[row_of[u], Vidx] * g[Vidx]
        val = -terms.sum()
        if abs(val) <= CANCEL_TOL * np.abs(terms).sum():
            val = 0.0
        g[u] = val
    return make_circuit(g)


def find_circuits(A, pivot_tol: float = numkit.PIVOT_TOL) -> CircuitFamily:
    """Components, a circuit family covering every same-component pair, and kappa-hat."""
    A = numkit.as_matrix(A)
    n = A.shape[1]
    elim = numkit.row_reduce(A, pivot_tol)
    graph = FundamentalGraph(A, elim)
    comps = graph.components()
    comp_id = [0] * n
    for c, comp in enumerate(comps):
        for k in comp:
            comp_id[k] = c
    circuits = [fundamental_circuit(elim, v) for v in elim.nonbasis]
    covered = set()
    for C in circuits:
        covered.update(itertools.combinations(C.support, 2))
    for comp in comps:
        for i, j in itertools.combinations(comp, 2):
            if (i, j) not in covered:
                C = circuit_through_pair(elim, graph, i, j)
                circuits.append(C)
                covered.update(itertools.combinations(C.support, 2))
    kappa = KappaEstimates(n, comp_id)
    for idx, C in enumerate(circuits):
        for i, j in itertools.permutations(C.support, 2):
            kappa.update(i, j, C.ratio(i, j), witness=idx)
    return CircuitFamily(comps, circuits, kappa, elim)


def _check_size(n):
    if n > BRUTEFORCE_MAX_N:
        raise TooLarge(f"brute force limited to n <= {BRUTEFORCE_MAX_N}, got {n}")


def enumerate_circuits_bruteforce(A, rtol: float = 1e-10) -> list:
    """All circuits, by increasing support size (test oracle)."""
    A = numkit.as_matrix(A)
    n = A.shape[1]
    _check_size(n)
    found = []
    supports = []
    # rank decisions relative to the whole matrix, so roundoff-sized columns count as zero
    scale = max(np.abs(A).max(), 1e-300)
    for size in range(1, min(n, A.shape[0] + 1) + 1):
        for S in itertools.combinations(range(n), size):
            Sset = set(S)
            if any(T <= Sset for T in supports):
                continue
            sub = A[:, S]
            _, s, Vt = np.linalg.svd(sub, full_matrices=True)
            rank = int(np.sum(s > rtol * scale * size))
            if rank == size - 1:
                g = np.zeros(n)
                g[list(S)] = Vt[-1]
                found.append(make_circuit(g))
                supports.append(Sset)
    return found


def kappa_bruteforce(A, circuits=None) -> dict:
    """True circuit ratios kappa_ij for all pairs that share a circuit."""
    if circuits is None:
        circuits = enumerate_circuits_bruteforce(A)
    kappa = {}
    for C in circuits:
        for i, j in itertools.permutations(C.support, 2):
            r = C.ratio(i, j)
            if r > kappa.get((i, j), 0.0):
                kappa[(i, j)] = r
    return kappa


def kappa_measure(kappa: dict) -> float:
    """max kappa_ij, with 1 for matroids without two-element circuits."""
    return max(kappa.values(), default=1.0)
