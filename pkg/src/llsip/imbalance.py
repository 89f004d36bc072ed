"""Circuit-ratio digraph analytics: chi-bar estimate, max geometric mean cycle, rescaling.

All cycle and path computations run on logarithms of the ratios.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import numkit
from .circuits import KappaEstimates, find_circuits, kappa_bruteforce
from .errors import EmptyGraph, NegativeCycle, TooLarge

CHIBAR_MAX_SUBSETS = 100_000
# Bellman-Ford slack absorbing roundoff on critical cycles
BF_SHIFT = 1e-12


@dataclass
class CircuitRatioDigraph:
    n: int
    edges: dict  # (i, j) -> weight > 0

    @classmethod
    def from_kappa(cls, kappa) -> "CircuitRatioDigraph":
        if isinstance(kappa, KappaEstimates):
            return cls(kappa.n, dict(kappa.values))
        n = 1 + max((max(p) for p in kappa), default=-1)
        return cls(n, dict(kappa))

    def log_edges(self):
        logs = {e: math.log(w) for e, w in self.edges.items()}
        if logs:
            span = max(logs.values()) - min(logs.values())
            if span > 300 * math.log(10):
                warnings.warn("circuit ratios span more than 300 orders of magnitude", RuntimeWarning)
        return logs


@dataclass
class RescalingResult:
    d: np.ndarray
    t_hat: float
    xi: float


def _as_graph(g) -> CircuitRatioDigraph:
    return g if isinstance(g, CircuitRatioDigraph) else CircuitRatioDigraph.from_kappa(g)


def chibar_lower_estimate(kappa, strict: bool = False) -> float:
    """xi = max kappa-hat; 1 for a free matroid unless ``strict``."""
    g = _as_graph(kappa)
    if not g.edges:
        if strict:
            raise EmptyGraph("no circuits")
        return 1.0
    return max(g.edges.values())


def max_geometric_mean_cycle(graph) -> float:
    """max over directed cycles H of (prod of weights on H)^(1/|H|).

    Karp's dynamic program for the maximum mean cycle, run on log-weights
    with every vertex as a start (D_0 = 0).
    """
    g = _as_graph(graph)
    if not g.edges:
        raise EmptyGraph("graph has no edges")
    logs = g.log_edges()
    n = g.n
    src = np.array([e[0] for e in logs])
    dst = np.array([e[1] for e in logs])
    w = np.array(list(logs.values()))
    D = np.full((n + 1, n), -np.inf)
    D[0] = 0.0
    for k in range(1, n + 1):
        cand = D[k - 1][src] + w
        np.maximum.at(D[k], dst, cand)
    best = -np.inf
    with np.errstate(invalid="ignore"):
        for v in range(n):
            if not np.isfinite(D[n, v]):
                continue
            ks = np.arange(n)
            vals = (D[n, v] - D[ks, v]) / (n - ks)
            vals = np.where(np.isfinite(D[ks, v]), vals, np.inf)
            best = max(best, vals.min())
    if not np.isfinite(best):
        raise EmptyGraph("graph has no directed cycle")
    return math.exp(best)


def compute_rescaling(graph, t_hat: float) -> np.ndarray:
    """Positive d with kappa_ij d_j / d_i <= t_hat on every edge (Bellman-Ford)."""
    g = _as_graph(graph)
    logs = g.log_edges()
    lt = math.log(t_hat)
    n = g.n
    edges = [(i, j, lt - w + BF_SHIFT) for (i, j), w in sorted(logs.items())]
    pot = np.zeros(n)  # virtual source with zero-weight edges to all nodes
    for _ in range(n + 1):
        changed = False
        for i, j, w in edges:
            if pot[i] + w < pot[j]:
                pot[j] = pot[i] + w
                changed = True
        if not changed:
            break
    else:
        raise NegativeCycle("t_hat is below the maximum geometric mean cycle value")
    return np.exp(pot - pot.max())


def estimate_rescaling(A=None, kappa=None) -> RescalingResult:
    """xi, t_hat and the rescaling d from the Find-Circuits estimates of A."""
    if kappa is None:
        kappa = find_circuits(A).kappa
    g = _as_graph(kappa)
    if not g.edges:
        return RescalingResult(np.ones(g.n), 1.0, 1.0)
    t_hat = max_geometric_mean_cycle(g)
    d = compute_rescaling(g, t_hat)
    return RescalingResult(d, t_hat, chibar_lower_estimate(g))


def rescaled_matrix(A, d) -> np.ndarray:
    """A Diag(d)^{-1}, whose kernel is Diag(d) ker(A)."""
    return numkit.as_matrix(A) / np.asarray(d, dtype=float)


def chibar_bruteforce(A, rtol: float = 1e-12) -> float:
    """max ||B^{-1} A|| over non-singular m x m column submatrices B."""
    A = numkit.as_matrix(A)
    m, n = A.shape
    if math.comb(n, m) > CHIBAR_MAX_SUBSETS:
        raise TooLarge(f"C({n},{m}) exceeds {CHIBAR_MAX_SUBSETS}")
    best = 0.0
    for S in itertools.combinations(range(n), m):
        B = A[:, S]
        sv = np.linalg.svd(B, compute_uv=False)
        if sv[-1] <= rtol * sv[0] * m:
            continue
        best = max(best, numkit.spectral_norm(np.linalg.solve(B, A)))
    return best


def kappa_star_bruteforce(true_kappa: dict, n: int | None = None) -> float:
    """kappa* as the max geometric mean cycle of the true circuit ratios."""
    if not true_kappa:
        return 1.0
    g = CircuitRatioDigraph.from_kappa(true_kappa)
    if n is not None:
        g.n = n
    return max_geometric_mean_cycle(g)


def kappa_star_of(A) -> float:
    return kappa_star_bruteforce(kappa_bruteforce(A), numkit.as_matrix(A).shape[1])
