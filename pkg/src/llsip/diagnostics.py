"""Estimated pair potentials and crossover-style events over a solve trace.

The potentials use kappa-hat and t-hat in place of the true circuit ratios
and kappa*, which are not computable in general; every quantity here is an
estimate. Nothing in this module feeds back into the solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonMonotoneMu


def rho_estimate(kappa_ij: float, delta, i: int, j: int, t_hat: float, gamma: float) -> float:
    """log(kappa-hat_ij delta_j / delta_i) / log(4 n t_hat / gamma)."""
    n = len(delta)
    return math.log(kappa_ij * delta[j] / delta[i]) / math.log(4 * n * t_hat / gamma)


def clamp_psi(value: float, n: int) -> float:
    return max(1.0, min(2.0 * n, value))


@dataclass
class PotentialState:
    n: int
    running_inf: dict = field(default_factory=dict)
    last_mu: float = math.inf

    def psi(self, pair) -> float:
        return clamp_psi(self.running_inf.get(pair, math.inf), self.n)

    @property
    def psi_map(self) -> dict:
        return {p: self.psi(p) for p in self.running_inf}

    @property
    def total(self) -> float:
        """sum of log2 Psi-hat over tracked pairs."""
        return sum(math.log2(v) for v in self.psi_map.values())


def update_potentials(state: PotentialState, mu: float, rho: dict) -> PotentialState:
    """Fold the rho-hat values observed at gap ``mu`` into the running infimum."""
    if mu >= state.last_mu:
        raise NonMonotoneMu(f"mu went from {state.last_mu:g} to {mu:g}")
    state.last_mu = mu
    for pair, r in rho.items():
        state.running_inf[pair] = min(state.running_inf.get(pair, math.inf), r)
    return state


def rho_map(kappa, delta, t_hat: float, gamma: float) -> dict:
    return {(i, j): rho_estimate(v, delta, i, j, t_hat, gamma) for (i, j), v in kappa.items()}


def potential_trajectory(rhos: list, n: int) -> list:
    """Psi-hat after every iteration: the clamped infimum over all later iterations.

    Evaluated backwards in time this is a suffix minimum, hence nondecreasing
    as the solve proceeds.
    """
    out = [None] * len(rhos)
    suffix: dict = {}
    for t in range(len(rhos) - 1, -1, -1):
        out[t] = {p: clamp_psi(suffix.get(p, math.inf), n) for p in set(suffix) | set(rhos[t])}
        for p, r in rhos[t].items():
            suffix[p] = min(suffix.get(p, math.inf), r)
    return out


def total_bound(n: int) -> float:
    return n * (n - 1) * (math.log2(n) + 1)


class PotentialRecorder:
    """Observer for lp_solve collecting rho-hat at every iteration."""

    def __init__(self, t_hat: float, gamma: float):
        self.t_hat = t_hat
        self.gamma = gamma
        self.mus = []
        self.rhos = []

    def __call__(self, record, w, kappa):
        delta = np.sqrt(w.s / w.x)
        r = rho_map(kappa, delta, self.t_hat, self.gamma)
        self.mus.append(record.mu)
        self.rhos.append(r)
        record.potentials = {"rho_estimated": {f"{i},{j}": v for (i, j), v in sorted(r.items())}}

    def trajectory(self, n: int) -> list:
        return potential_trajectory(self.rhos, n)


@dataclass
class Event:
    kind: str  # "layer-doubling" | "separation" | "certificate"
    iteration: int
    pair: tuple
    detail: dict = field(default_factory=dict)


def detect_events(records) -> list:
    """Layer-size doublings, pair separations and certificate updates in a trace."""
    events = []
    layered = [(r.iteration, r.partition) for r in records if r.partition]
    for r in records:
        for cert in r.certificates or []:
            i, j, t, new = cert
            events.append(Event("certificate", r.iteration, (i, j), {"t": t, "kappa_hat": new}))
    level: dict = {}
    for it, part in layered:
        for L in part:
            if len(L) < 2:
                continue
            lev = int(math.floor(math.log2(len(L))))
            for a in L:
                for b in L:
                    if a < b:
                        prev = level.get((a, b))
                        if prev is not None and lev > prev:
                            events.append(Event("layer-doubling", it, (a, b), {"size": len(L)}))
                        if prev is None or lev > prev:
                            level[(a, b)] = lev
    # separation: a pair that shared a layer and is ordered i before j from some point on
    pos_seq = []
    for it, part in layered:
        pos = {}
        for k, L in enumerate(part):
            for a in L:
                pos[a] = k
        pos_seq.append((it, pos))
    for (a, b) in sorted(level):
        for i, j in ((a, b), (b, a)):
            last_shared = None
            for t, (it, pos) in enumerate(pos_seq):
                if pos.get(i) == pos.get(j):
                    last_shared = t
            if last_shared is None or last_shared == len(pos_seq) - 1:
                continue
            tail = pos_seq[last_shared + 1:]
            if all(pos[i] < pos[j] for _, pos in tail):
                events.append(Event("separation", tail[0][0], (i, j)))
    return sorted(events, key=lambda e: (e.iteration, e.kind, e.pair))
