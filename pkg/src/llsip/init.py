"""Big-M initialization, map-back, two-phase feasibility and the M search.

The extended system has variables (x, xl, xu) and reads

    min c^T x + M e^T xl   s.t.  A(x - xl) = b,  x + xu = 2Me,  x, xl, xu >= 0,

with a closed-form starting point near the central path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .circuits import find_circuits
from .config import SolverConfig
from .errors import NeighborhoodViolation, RankDeficient, SearchLimit
from .imbalance import estimate_rescaling
from .ipm import Iterate, LPProblem, SolveResult, centrality_gap, lp_solve

CERT_TOL = 1e-8
DUAL_TOL = 1e-9
MAX_SQUARINGS = 60
GUESS_FLOOR = 100.0


@dataclass
class ExtendedInstance:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    M: float
    m: int
    n: int

    def split(self, v):
        n = self.n
        return v[:n], v[n:2 * n], v[2 * n:]


@dataclass
class Certificate:
    kind: str  # "PrimalInfeasible" | "DualInfeasible"
    witness: np.ndarray
    report: dict = field(default_factory=dict)


class MBtooSmall:
    """Sentinel: the extended optimum does not correspond to an optimum of the original LP."""

    def __init__(self, reason: str = ""):
        self.reason = reason

    def __repr__(self):
        return f"MBtooSmall({self.reason!r})"


def build_extended(A, b, c, M: float) -> ExtendedInstance:
    A = numkit.as_matrix(A)
    m, n = A.shape
    I = np.eye(n)
    Z = np.zeros((n, n))
    Ahat = np.block([[A, -A, np.zeros((m, n))], [I, Z, I]])
    bhat = np.concatenate([np.asarray(b, dtype=float), 2 * M * np.ones(n)])
    chat = np.concatenate([np.asarray(c, dtype=float), M * np.ones(n), np.zeros(n)])
    return ExtendedInstance(Ahat, bhat, chat, float(M), m, n)


def choose_M(chibar: float, c_norm: float, d_norm: float) -> float:
    return float(max(15.0 * max((chibar + 1.0) * c_norm, chibar * d_norm), 1.0))


def initial_point(A, b, c, M: float, check: bool = True, beta: float = 0.125) -> Iterate:
    """The closed-form start x = Me, xl = Me - d, xu = Me, y = 0, z = -Me."""
    A = numkit.as_matrix(A)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    d = numkit.min_norm_solution(A, b)
    e = np.ones(n)
    x = np.concatenate([M * e, M * e - d, M * e])
    y = np.concatenate([np.zeros(m), -M * e])
    s = np.concatenate([M * e + c, M * e, M * e])
    w = Iterate(x, y, s)
    if check:
        if not (np.all(x > 0) and np.all(s > 0)) or centrality_gap(w) > beta + 1e-12:
            gap = centrality_gap(w) if np.all(x > 0) and np.all(s > 0) else float("inf")
            raise NeighborhoodViolation(f"initial point has centrality gap {gap:.3g}; M = {M:g} is too small")
    return w


def initial_mu(A, b, c, M: float) -> float:
    """(3nM^2 + M c^T e - M d^T e) / (3n)."""
    A = numkit.as_matrix(A)
    n = A.shape[1]
    d = numkit.min_norm_solution(A, b)
    c = np.asarray(c, dtype=float)
    return (3 * n * M * M + M * c.sum() - M * d.sum()) / (3 * n)


def map_back(ext: ExtendedInstance, result: SolveResult, A, b, c):
    """Original optimal pair from an extended optimum, or MBtooSmall."""
    w = result.iterate
    x, xl, xu = ext.split(w.x)
    s, sl, su = ext.split(w.s)
    m, n = ext.m, ext.n
    tol = 1e-7 * ext.M * n
    if np.max(xl, initial=0.0) > tol:
        return MBtooSmall(f"auxiliary xl reaches {np.max(xl):.3g}")
    y = w.y[:m]
    # c - A^T y = s - su; a negative entry means the bound x <= 2M is binding
    s_orig = s - su
    A = numkit.as_matrix(A)
    scale = np.linalg.norm(c) + np.linalg.norm(A, 2) * np.linalg.norm(y) + 1e-300
    if np.min(s_orig, initial=0.0) < -DUAL_TOL * scale:
        return MBtooSmall("the artificial bound 2M is binding")
    return Iterate(x.copy(), y, np.maximum(s_orig, 0.0))


def auxiliary_vanishes(ext: ExtendedInstance, result: SolveResult) -> bool:
    _, xl, _ = ext.split(result.iterate.x)
    return bool(np.max(xl, initial=0.0) <= 1e-7 * ext.M * ext.n)


def _verify_primal_certificate(A, b, y):
    A = numkit.as_matrix(A)
    scale = np.linalg.norm(y) * np.linalg.norm(A, 2) + 1e-300
    aty = A.T @ y
    by = float(np.asarray(b) @ y)
    ok = bool(np.all(aty <= CERT_TOL * scale) and by > CERT_TOL * np.linalg.norm(y) * (np.linalg.norm(b) + 1e-300))
    return ok, {"max_ATy": float(aty.max()), "bTy": by}


def _verify_dual_certificate(A, c, x):
    A = numkit.as_matrix(A)
    nx = np.linalg.norm(x) + 1e-300
    ax = np.linalg.norm(A @ x)
    cx = float(np.asarray(c) @ x)
    ok = bool(ax <= CERT_TOL * np.linalg.norm(A, 2) * nx and x.min() >= -CERT_TOL * nx
              and cx < -CERT_TOL * np.linalg.norm(c) * nx)
    return ok, {"norm_Ax": float(ax), "min_x": float(x.min()), "cTx": cx}


@dataclass
class SearchAttempt:
    phase: str
    chibar_guess: float
    M: float
    outcome: str
    iterations: int = 0
    n: int = 0  # columns of the extended system
    mu0: float = 0.0


def _extended_solve(A, b, c, M, config, beta):
    ext = build_extended(A, b, c, M)
    w0 = initial_point(A, b, c, M, beta=beta)
    res = lp_solve(ext.A, ext.b, ext.c, w0, config)
    res.termination.setdefault("mu0", w0.mu)
    return ext, res


def _attempt(phase, guess, M, outcome, res):
    return SearchAttempt(phase, guess, M, outcome, res.iterations, res.iterate.x.size, res.termination["mu0"])


def two_phase_feasibility(A, b, c, chibar_guess: float, config: SolverConfig | None = None, history=None):
    """None if both primal and dual are feasible, a Certificate if one is not,
    or MBtooSmall when the guess is too low to decide."""
    cfg = config or SolverConfig()
    A = numkit.as_matrix(A)
    m, n = A.shape
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    hist = history if history is not None else []
    if np.any(b):
        d = numkit.min_norm_solution(A, b)
        M = choose_M(chibar_guess, 0.0, np.linalg.norm(d))
        ext, res = _extended_solve(A, b, np.zeros(n), M, cfg, cfg.beta)
        if res.status != "Optimal":
            hist.append(_attempt("phase1", chibar_guess, M, res.status, res))
            return MBtooSmall("phase 1 did not reach optimality")
        if not auxiliary_vanishes(ext, res):
            y = res.iterate.y[:m]
            ok, rep = _verify_primal_certificate(A, b, y)
            hist.append(_attempt("phase1", chibar_guess, M, "certificate" if ok else "too-small", res))
            if ok:
                return Certificate("PrimalInfeasible", y, rep)
            return MBtooSmall("phase 1 optimum positive without a certificate")
        hist.append(_attempt("phase1", chibar_guess, M, "feasible", res))
    if np.any(c):
        M = choose_M(chibar_guess, np.linalg.norm(c), 0.0)
        ext, res = _extended_solve(A, np.zeros(m), c, M, cfg, cfg.beta)
        if res.status != "Optimal":
            hist.append(_attempt("phase2", chibar_guess, M, res.status, res))
            return MBtooSmall("phase 2 did not reach optimality")
        x, xl, _ = ext.split(res.iterate.x)
        value = float(c @ x + M * xl.sum())
        if value < -CERT_TOL * np.linalg.norm(c) * max(np.linalg.norm(x), 1.0):
            ok, rep = _verify_dual_certificate(A, c, x)
            hist.append(_attempt("phase2", chibar_guess, M, "certificate" if ok else "too-small", res))
            if ok:
                return Certificate("DualInfeasible", x, rep)
            return MBtooSmall("phase 2 optimum negative without a certificate")
        hist.append(_attempt("phase2", chibar_guess, M, "feasible", res))
    return None


def initial_guess(A, kappa=None) -> float:
    """n t_hat^2 xi, floored at 100."""
    A = numkit.as_matrix(A)
    est = estimate_rescaling(A, kappa)
    return max(A.shape[1] * est.t_hat ** 2 * est.xi, GUESS_FLOOR)


@dataclass
class SearchResult:
    status: str  # "Optimal" | "PrimalInfeasible" | "DualInfeasible" | "IterationLimit"
    iterate: Iterate | None
    objective: float | None
    certificate: Certificate | None
    history: list
    solve: SolveResult | None = None
    M: float | None = None
    mu0: float | None = None

    @property
    def guesses(self) -> list:
        out = []
        for h in self.history:
            if not out or out[-1] != h.chibar_guess:
                out.append(h.chibar_guess)
        return out


def solve_with_m_search(A, b, c, config: SolverConfig | None = None, guess: float | None = None,
                        big_m: float | None = None, max_squarings: int = MAX_SQUARINGS) -> SearchResult:
    """Two-phase feasibility, then the big-M solve, squaring the chi-bar guess on failure."""
    cfg = config or SolverConfig()
    A = numkit.as_matrix(A)
    m, n = A.shape
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if numkit.numerical_rank(A) < m:
        raise RankDeficient("A does not have full row rank")
    g = guess if guess is not None else initial_guess(A)
    history = []
    d = numkit.min_norm_solution(A, b)
    for _ in range(max_squarings + 1):
        if not math.isfinite(g):
            raise SearchLimit("chi-bar guess overflowed")
        if big_m is None:
            verdict = two_phase_feasibility(A, b, c, g, cfg, history)
            if isinstance(verdict, Certificate):
                return SearchResult(verdict.kind, None, None, verdict, history)
            M = choose_M(g, np.linalg.norm(c), np.linalg.norm(d))
        else:
            verdict = None
            M = float(big_m)
        if not isinstance(verdict, MBtooSmall):
            ext, res = _extended_solve(A, b, c, M, cfg, cfg.beta)
            if res.status != "Optimal":
                history.append(_attempt("solve", g, M, res.status, res))
                return SearchResult(res.status, None, None, None, history, res, M)
            mapped = map_back(ext, res, A, b, c)
            if not isinstance(mapped, MBtooSmall):
                history.append(_attempt("solve", g, M, "optimal", res))
                return SearchResult("Optimal", mapped, float(c @ mapped.x), None, history, res, M,
                                    initial_mu(A, b, c, M))
            history.append(_attempt("solve", g, M, "too-small", res))
            if big_m is not None:
                raise SearchLimit(f"big-M {big_m:g} too small for this instance")
        g = g * g
    raise SearchLimit(f"no valid M after {max_squarings} squarings")
