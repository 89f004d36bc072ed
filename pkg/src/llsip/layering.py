"""Layering: a delta-balanced ordered partition from circuit-ratio estimates.

The estimated long-edge graph has an edge (i, j) whenever the rescaled
estimate kappa-hat_ij * delta_j / delta_i reaches the threshold. Its strongly
connected components come in a unique order (every same-component pair
has at least one orientation); Verify-Lift then checks each suffix, and every
failure both raises an estimate and adds a backward edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import lifting, numkit
from .circuits import KappaEstimates
from .errors import OrderingAmbiguous


def default_gamma(n: int, beta: float = 0.125) -> float:
    return beta / (2 ** 10 * n ** 5)


@dataclass
class AuxGraph:
    n: int
    sigma: float
    edges: set
    certified: set = field(default_factory=set)
    nodes: tuple | None = None

    def all_edges(self) -> set:
        return self.edges | self.certified

    def vertex_list(self) -> list:
        return list(self.nodes) if self.nodes is not None else list(range(self.n))


def rescaled_ratio(kappa, i, j, delta) -> float:
    return kappa[(i, j)] * delta[j] / delta[i]


def build_aux_graph(kappa: KappaEstimates, delta, sigma: float, nodes=None) -> AuxGraph:
    delta = np.asarray(delta, dtype=float)
    keep = None if nodes is None else set(nodes)
    edges = set()
    for (i, j), v in kappa.items():
        if keep is not None and (i not in keep or j not in keep):
            continue
        if v * delta[j] / delta[i] >= sigma:
            edges.add((i, j))
    return AuxGraph(len(delta), sigma, edges, nodes=tuple(sorted(nodes)) if nodes is not None else None)


def scc_topological(graph: AuxGraph) -> list:
    """Strongly connected components, ordered so that cross edges point forward."""
    verts = graph.vertex_list()
    if not verts:
        return []
    pos = {v: t for t, v in enumerate(verts)}
    E = [(pos[i], pos[j]) for i, j in graph.all_edges() if i in pos and j in pos]
    N = len(verts)
    rows = [e[0] for e in E]
    cols = [e[1] for e in E]
    adj = csr_matrix((np.ones(len(E)), (rows, cols)), shape=(N, N))
    ncomp, labels = connected_components(adj, directed=True, connection="strong")
    members = [[] for _ in range(ncomp)]
    for t, lab in enumerate(labels):
        members[lab].append(verts[t])
    succ = [set() for _ in range(ncomp)]
    indeg = [0] * ncomp
    for a, b in E:
        la, lb = labels[a], labels[b]
        if la != lb and lb not in succ[la]:
            succ[la].add(lb)
            indeg[lb] += 1
    ready = [c for c in range(ncomp) if indeg[c] == 0]
    order = []
    while ready:
        if len(ready) > 1:
            raise OrderingAmbiguous("components are not totally ordered; estimates miss a pair")
        c = ready.pop()
        order.append(c)
        for d in succ[c]:
            indeg[d] -= 1
            if indeg[d] == 0:
                ready.append(d)
    return [tuple(sorted(members[c])) for c in order]


@dataclass
class LayeringResult:
    partition: list
    kappa: KappaEstimates
    initial_components: int
    certificates: list  # (i, j, t, new kappa-hat value)
    verdicts: list


def layering(delta, kappa: KappaEstimates, Q, gamma: float, structure=None,
             matroid_components=None, fast: bool = True) -> LayeringResult:
    """Layer the subspace Diag(delta) W, given by the orthonormal basis Q.

    ``kappa`` is updated in place. Separable matroids are handled one
    non-separable component at a time and the layers are concatenated.
    """
    delta = np.asarray(delta, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = len(delta)
    if matroid_components is None:
        matroid_components = [tuple(range(n))]
    sigma = gamma / n
    partition, certificates, verdicts = [], [], []
    initial = 0
    for comp in matroid_components:
        comp = list(comp)
        if len(comp) == 1:
            partition.append(tuple(comp))
            initial += 1
            continue
        graph = build_aux_graph(kappa, delta, sigma, nodes=comp)
        C = scc_topological(graph)
        initial += len(C)
        if len(C) > 1:
            Qc, Sc = _restrict(Q, comp, structure)
            local = {g: t for t, g in enumerate(comp)}
            Cloc = [[local[g] for g in part] for part in C]
            # the Pass test n * max|B| <= gamma uses the global n
            theta = gamma * len(comp) / n
            if fast:
                vs = lifting.verify_lift_suffixes(Qc, Cloc, theta, structure=Sc)
            else:
                vs = [lifting.verify_lift(Qc, [r for part in Cloc[k:] for r in part], theta,
                                          row_order=lifting.layered_row_order(Cloc, k), structure=Sc)
                      for k in range(1, len(Cloc))]
            for v in vs:
                if v.passed:
                    verdicts.append(v)
                    continue
                i, j = comp[v.i], comp[v.j]
                v = lifting.LiftVerdict(False, i=i, j=j, t=v.t, max_entry=v.max_entry)
                verdicts.append(v)
                new = v.t * delta[i] / delta[j]
                kappa.update(i, j, new, witness=("verify-lift", v.t))
                graph.certified.add((i, j))
                certificates.append((i, j, v.t, new))
            if certificates:
                C = scc_topological(graph)
        partition.extend(C)
    return LayeringResult(partition, kappa, initial, certificates, verdicts)


def _restrict(Q, comp, structure):
    """Orthonormal basis of the projection of the subspace onto one matroid component."""
    S = (structure if structure is not None else Q)[comp]
    dim = numkit.numerical_rank(S / np.maximum(np.linalg.norm(S, axis=1), 1e-300)[:, None], 1e-10)
    return numkit.orthonormal_range(Q[comp], rank=dim), (None if structure is None else S)
