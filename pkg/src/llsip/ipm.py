"""Predictor-corrector engine: directions, step lengths and the LP-Solve loop.

All directions are computed in the scaled space. With delta = sqrt(s/x) and
U = Diag(delta) ker(A), the affine and centrality systems are orthogonal
decompositions of a vector into its parts in U and in its complement, and
the layered least-squares direction is a sequence of layer-wise
minimizations over the same two subspaces. Working with orthonormal bases
of U and of its complement keeps every solve well conditioned no matter how
spread out delta becomes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import numkit
from .circuits import KappaEstimates, find_circuits
from .config import SolverConfig
from .errors import (DimensionMismatch, EmptyGraph, InvalidPartition, NeighborhoodViolation,
                     NumericalBreakdown, RoundingFailed)
from .layering import layering

FEAS_TOL = 1e-8


@dataclass
class Iterate:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.s = np.asarray(self.s, dtype=float)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def mu(self) -> float:
        return float(self.x @ self.s) / self.n

    def copy(self) -> "Iterate":
        return Iterate(self.x.copy(), self.y.copy(), self.s.copy())


def mu(w: Iterate) -> float:
    return w.mu


def delta(w: Iterate) -> np.ndarray:
    return np.sqrt(w.s / w.x)


def centrality_gap(w: Iterate) -> float:
    m = w.mu
    return float(np.linalg.norm(w.x * w.s / m - 1.0))


def in_neighborhood(x, s, theta: float) -> bool:
    if not (np.all(x > 0) and np.all(s > 0)):
        return False
    p = x * s
    m = p.mean()
    return m > 0 and np.linalg.norm(p / m - 1.0) <= theta


@dataclass
class ResidualPair:
    rx: np.ndarray
    rs: np.ndarray


def epsilon_measure(R: ResidualPair, idx=None) -> float:
    m = np.minimum(np.abs(R.rx), np.abs(R.rs))
    if idx is not None:
        m = m[list(idx)]
    return float(m.max()) if m.size else 0.0


@dataclass
class Direction:
    dx: np.ndarray
    dy: np.ndarray
    ds: np.ndarray
    kind: str  # "affine" | "centrality" | "lls"
    partition: list | None = None
    residuals: ResidualPair | None = None
    # full-step endpoints x + dx, s + ds, computed without cancellation
    x_full: np.ndarray | None = None
    s_full: np.ndarray | None = None


class LPProblem:
    """Validated data (A, b, c) with the kernel bases shared by all iterations."""

    def __init__(self, A, b, c, pivot_tol: float = numkit.PIVOT_TOL):
        self.A = numkit.as_matrix(A)
        m, n = self.A.shape
        self.b = np.asarray(b, dtype=float).ravel()
        self.c = np.asarray(c, dtype=float).ravel()
        if self.b.size != m or self.c.size != n:
            raise DimensionMismatch(f"A is {m}x{n}, b has {self.b.size}, c has {self.c.size} entries")
        self.K = numkit.equilibrated_kernel_basis(self.A, pivot_tol)
        self.m, self.n = m, n
        self._dims = {}

    def dim_kernel_on(self, S) -> int:
        """dim(ker(A) restricted to vectors supported on S)."""
        key = ("W", frozenset(S))
        if key not in self._dims:
            self._dims[key] = len(key[1]) - numkit.column_rank(self.A, sorted(key[1]))
        return self._dims[key]

    def dim_range_on(self, S) -> int:
        """dim of {A^T y supported on S}."""
        key = ("R", frozenset(S))
        if key not in self._dims:
            rest = [i for i in range(self.n) if i not in key[1]]
            self._dims[key] = self.m - numkit.column_rank(self.A, rest)
        return self._dims[key]

    def kernel_on(self, S) -> np.ndarray:
        """Basis of {w in ker(A): supp(w) in S}, rows indexed by sorted(S)."""
        key = ("KW", frozenset(S))
        if key not in self._dims:
            cols = sorted(key[1])
            sub = self.A[:, cols]
            norms = np.linalg.norm(sub, axis=0)
            norms[norms == 0] = 1.0
            N = numkit.null_space(sub / norms, dim=self.dim_kernel_on(cols))
            self._dims[key] = N / norms[:, None]
        return self._dims[key]

    def multipliers_on(self, S) -> np.ndarray:
        """Basis Y of {y: A^T y supported on S}."""
        key = ("KR", frozenset(S))
        if key not in self._dims:
            rest = [i for i in range(self.n) if i not in key[1]]
            if not rest:
                Y = np.eye(self.m)
            else:
                sub = self.A[:, rest]
                norms = np.linalg.norm(sub, axis=0)
                norms[norms == 0] = 1.0
                Y = numkit.null_space((sub / norms).T, dim=self.dim_range_on(key[1]))
            self._dims[key] = Y
        return self._dims[key]

    def primal_residual(self, x) -> float:
        A = self.A
        return float(np.linalg.norm(A @ x - self.b) / (np.linalg.norm(A, 2) * np.linalg.norm(x) + np.linalg.norm(self.b) + 1e-300))

    def dual_residual(self, y, s) -> float:
        A = self.A
        return float(np.linalg.norm(A.T @ y + s - self.c) / (np.linalg.norm(A, 2) * np.linalg.norm(y) + np.linalg.norm(self.c) + np.linalg.norm(s) + 1e-300))


class ScaledGeometry:
    """Orthonormal bases of U = Diag(delta) W and of its complement at one iterate."""

    def __init__(self, prob: LPProblem, w: Iterate):
        self.prob = prob
        self.w = w
        self.mu = w.mu
        self.delta = np.sqrt(w.s / w.x)
        self.v = np.sqrt(w.x * w.s / self.mu)
        k = prob.n - prob.m
        self.QU = numkit.orthonormal_range(self.delta[:, None] * prob.K, rank=k)
        self._dual = None

    @property
    def dual_factor(self):
        if self._dual is None:
            M = self.prob.A.T / self.delta[:, None]
            Q, R, perm = numkit.sorted_qr(M)
            m = self.prob.m
            self._dual = (Q[:, :m], R[:m, :m], perm)
        return self._dual

    @property
    def QP(self) -> np.ndarray:
        return self.dual_factor[0]

    def project_U(self, r) -> np.ndarray:
        return self.QU @ (self.QU.T @ r)

    def dual_step(self, t) -> np.ndarray:
        """dy with Diag(delta)^{-1} A^T dy = t, for t in the complement of U."""
        Q, R, perm = self.dual_factor
        z = scipy.linalg.solve_triangular(R, Q.T @ t)
        dy = np.empty_like(z)
        dy[perm] = z
        return dy

    def from_residuals(self, rx, rs, kind, partition=None, dy=None) -> Direction:
        sq = math.sqrt(self.mu)
        d, v = self.delta, self.v
        x_full = sq * rx / d
        s_full = sq * d * rs
        dx = sq * (rx - v) / d
        ds = sq * d * (rs - v)
        if dy is None:
            dy = self.dual_step(-sq * (rs - v))
        return Direction(dx, dy, ds, kind, partition, ResidualPair(rx, rs), x_full, s_full)


def _geometry(prob_or_A, w, geom=None):
    if geom is not None:
        return geom
    if isinstance(prob_or_A, LPProblem):
        prob = prob_or_A
    else:
        A = numkit.as_matrix(prob_or_A)
        # b and c do not enter the directions
        prob = LPProblem(A, A @ w.x, A.T @ w.y + w.s)
    return ScaledGeometry(prob, w)


def affine_direction(prob, w: Iterate, geom: ScaledGeometry | None = None) -> Direction:
    """Predictor direction: s dx + x ds = -xs, A dx = 0, A^T dy + ds = 0."""
    g = _geometry(prob, w, geom)
    rs = g.project_U(g.v)
    rx = g.v - rs
    return g.from_residuals(rx, rs, "affine")


def centrality_direction(prob, w: Iterate, geom: ScaledGeometry | None = None) -> Direction:
    """Corrector direction: s dx + x ds = mu e - xs."""
    g = _geometry(prob, w, geom)
    r = (g.mu - w.x * w.s) / np.sqrt(w.x * w.s)
    a = g.project_U(r)
    dx = a / g.delta
    ds = g.delta * (r - a)
    dy = g.dual_step(-(r - a))
    return Direction(dx, dy, ds, "centrality")


def _layer_step(t, P, scale, rank):
    """Residual of t against range(Diag(scale) P), and coefficients z with
    Diag(scale) P z = residual - t."""
    G = numkit.orthonormal_range(scale[:, None] * P, rank=rank)
    res = t - G @ (G.T @ t)
    z, *_ = np.linalg.lstsq(P, (res - t) / scale, rcond=None)
    return res, z


def validate_partition(partition, n) -> list:
    layers = [list(map(int, L)) for L in partition]
    flat = sorted(i for L in layers for i in L)
    if flat != list(range(n)) or any(len(L) == 0 for L in layers):
        raise InvalidPartition("layers must be non-empty and partition the index set")
    return layers


def lls_residuals(prob: "LPProblem", delta, v, layers):
    """Residuals (Rx, Rs) and the dual multiplier offset of the LLS direction.

    Primal layers are fixed from the last one backwards: on J_k the free part
    is the projection of Diag(delta)(W restricted to J_{<=k}), whose basis
    comes from the unscaled kernel of A[:, J_{<=k}]. Dual layers are fixed
    forwards with Diag(delta)^{-1} range(A^T) restricted to J_{>=k}.
    """
    n = prob.n
    p = len(layers)
    rx = np.empty(n)
    off = np.zeros(n)
    for k in reversed(range(p)):
        L = layers[k]
        S_le = sorted(i for Lk in layers[:k + 1] for i in Lk)
        F = prob.kernel_on(S_le)  # rows indexed by S_le
        pos = {i: t for t, i in enumerate(S_le)}
        t = v[L] + off[L]
        rank = prob.dim_kernel_on(S_le) - prob.dim_kernel_on(set(S_le) - set(L))
        if rank == 0:
            rx[L] = t
        else:
            res, z = _layer_step(t, F[[pos[i] for i in L]], delta[L], rank)
            rx[L] = res
            off[S_le] += delta[S_le] * (F @ z)
    rs = np.empty(n)
    off = np.zeros(n)
    ycoef = np.zeros(prob.m)
    for k in range(p):
        L = layers[k]
        S_ge = sorted(i for Lk in layers[k:] for i in Lk)
        Y = prob.multipliers_on(S_ge)  # A^T Y is supported on S_ge
        V = prob.A.T @ Y
        t = v[L] + off[L]
        rest = set(S_ge) - set(L)
        rank = prob.dim_range_on(S_ge) - prob.dim_range_on(rest)
        if rank == 0:
            rs[L] = t
        else:
            res, z = _layer_step(t, V[L], 1.0 / delta[L], rank)
            rs[L] = res
            off[S_ge] += (V[S_ge] @ z) / delta[S_ge]
            ycoef += Y @ z
    return rx, rs, ycoef


def lls_direction(prob, w: Iterate, partition, geom: ScaledGeometry | None = None) -> Direction:
    """Layered least-squares direction for the ordered partition J_1, ..., J_p."""
    g = _geometry(prob, w, geom)
    layers = validate_partition(partition, g.prob.n)
    rx, rs, ycoef = lls_residuals(g.prob, g.delta, g.v, layers)
    d = g.from_residuals(rx, rs, "lls", [tuple(L) for L in layers], dy=-math.sqrt(g.mu) * ycoef)
    return d


def _endpoints(w: Iterate, d: Direction):
    xf = d.x_full if d.x_full is not None else w.x + d.dx
    sf = d.s_full if d.s_full is not None else w.s + d.ds
    return xf, sf


def point_at(w: Iterate, d: Direction, alpha: float) -> Iterate:
    if alpha > 0.5:
        xf, sf = _endpoints(w, d)
        tau = 1.0 - alpha
        x, s = xf - tau * d.dx, sf - tau * d.ds
    else:
        x, s = w.x + alpha * d.dx, w.s + alpha * d.ds
    return Iterate(x, w.y + alpha * d.dy, s)


def _membership(w, d, alpha, theta) -> bool:
    q = point_at(w, d, alpha)
    return in_neighborhood(q.x, q.s, theta)


def step_length(w: Iterate, d: Direction, bound: float = 0.25, width: float = 1e-12) -> float:
    """sup{a in [0,1]: w + a' d in N(bound) for all a' in [0, a]}.

    With tau = 1 - a, every product x_i s_i is a quadratic in tau, so the
    neighborhood condition is a quartic. Its crossing closest to tau = 1
    (a = 0) is located from the polynomial roots and refined by bisection on
    the directly evaluated membership test.
    """
    xf, sf = _endpoints(w, d)
    n = w.n
    P0 = xf * sf
    P1 = -(xf * d.ds + sf * d.dx)
    P2 = d.dx * d.ds
    if not (np.any(P1) or np.any(P2)):
        return 1.0
    M = np.array([P0.mean(), P1.mean(), P2.mean()])
    Q0, Q1, Q2 = P0 - M[0], P1 - M[1], P2 - M[2]
    g = np.array([
        Q0 @ Q0,
        2 * Q0 @ Q1,
        Q1 @ Q1 + 2 * Q0 @ Q2,
        2 * Q1 @ Q2,
        Q2 @ Q2,
    ])
    MM = np.polynomial.polynomial.polymul(M, M)
    g[:MM.size] -= bound ** 2 * MM
    cand = []
    for poly in (g, M):
        roots = np.polynomial.polynomial.polyroots(np.trim_zeros(poly, "b")) if np.any(poly) else []
        for r in np.atleast_1d(roots):
            if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)) and -1e-12 <= r.real < 1.0:
                cand.append(float(r.real))
    # walk down from tau = 1 to the first crossing into infeasibility
    alpha_hi = None
    for r in sorted(set(cand), reverse=True):
        a = 1.0 - r
        probe = min(1.0, a + max(1e-9 * (1.0 - a), 1e-15))
        if not _membership(w, d, probe, bound):
            alpha_hi = a
            break
    if alpha_hi is None:
        if _membership(w, d, 1.0, bound):
            return 1.0
        alpha_hi = 1.0
    lo = max(0.0, alpha_hi - max(1e-8 * (1.0 - alpha_hi), 1e-13))
    for _ in range(200):
        if _membership(w, d, lo, bound):
            break
        lo = lo - (alpha_hi - lo)
        if lo <= 0.0:
            lo = 0.0
            break
    hi = alpha_hi
    while hi - lo > width * max(1.0 - lo, 1e-3):
        mid = 0.5 * (lo + hi)
        if _membership(w, d, mid, bound):
            lo = mid
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo <= 4 * np.spacing(hi):
            break
    return lo


@dataclass
class IterationRecord:
    iteration: int
    mu: float
    kind: str
    alpha: float
    mu_after: float
    gap_predictor: float
    gap_corrector: float
    eps_affine: float
    eps_lls: float | None = None
    partition: list | None = None
    certificates: list = field(default_factory=list)
    affine_identity: tuple = (0.0, 0.0)
    residual_floor: float | None = None
    lls_bound: float | None = None
    potentials: dict | None = None


@dataclass
class SolveTrace:
    records: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)

    @property
    def mu_trajectory(self) -> list:
        return [r.mu for r in self.records]


@dataclass
class SolveResult:
    status: str  # "Optimal" | "IterationLimit"
    iterate: Iterate
    objective: float
    iterations: int
    trace: SolveTrace
    kappa: KappaEstimates | None = None
    termination: dict = field(default_factory=dict)


def exact_termination_round(prob: LPProblem, w: Iterate, d: Direction, tol: float = 1e-11) -> Iterate:
    """Round the full LLS step to an exactly complementary optimal pair."""
    rx, rs = d.residuals.rx, d.residuals.rs
    x = d.x_full.copy()
    s = d.s_full.copy()
    y = w.y + d.dy
    zx = np.abs(rx) <= tol
    zs = np.abs(rs) <= tol
    x[zx] = 0.0
    s[zs] = 0.0
    A = prob.A
    P = np.flatnonzero(~zx)
    Z = np.flatnonzero(zs)
    if P.size:
        r = prob.b - A[:, P] @ x[P]
        x[P] += np.linalg.lstsq(A[:, P], r, rcond=None)[0]
    if Z.size:
        r = prob.c[Z] - A[:, Z].T @ y
        y = y + np.linalg.lstsq(A[:, Z].T, r, rcond=None)[0]
    s = prob.c - A.T @ y
    s[Z] = 0.0
    report = {
        "primal_residual": prob.primal_residual(x),
        "dual_residual": prob.dual_residual(y, s),
        "min_x": float(x.min()),
        "min_s": float(s.min()),
        "complementarity": float(np.max(np.abs(x * s))),
    }
    scale_x = max(np.abs(x).max(), 1e-300)
    scale_s = max(np.abs(s).max(), 1e-300)
    bad = (
        report["primal_residual"] > FEAS_TOL
        or report["dual_residual"] > FEAS_TOL
        or report["min_x"] < -FEAS_TOL * scale_x
        or report["min_s"] < -FEAS_TOL * scale_s
        or np.any(~zx & ~zs)
    )
    if bad:
        raise RoundingFailed("rounded point is not an optimal pair", report)
    x = np.maximum(x, 0.0)
    s = np.maximum(s, 0.0)
    return Iterate(x, y, s)


def lp_solve(A, b, c, w0: Iterate, config: SolverConfig | None = None,
             kappa: KappaEstimates | None = None, components=None, observer=None) -> SolveResult:
    """Predictor-corrector path following with layered least-squares steps."""
    cfg = config or SolverConfig()
    prob = A if isinstance(A, LPProblem) else LPProblem(A, b, c, cfg.pivot_tol)
    n = prob.n
    beta = cfg.beta
    gamma = cfg.gamma_for(n)
    w = w0.copy()
    if w.x.size != n or w.s.size != n or w.y.size != prob.m:
        raise DimensionMismatch("starting point does not match the instance")
    if not (np.all(w.x > 0) and np.all(w.s > 0)):
        raise NeighborhoodViolation("starting point is not strictly positive")
    if centrality_gap(w) > beta + 1e-9:
        raise NeighborhoodViolation(f"starting point has centrality gap {centrality_gap(w):.3g} > {beta}")
    if kappa is None or components is None:
        fam = find_circuits(prob.A, cfg.pivot_tol)
        kappa = fam.kappa.copy() if kappa is None else kappa
        components = fam.components if components is None else components
    kappa = kappa.copy()
    recorder = None
    if cfg.diagnostics:
        recorder = _potential_recorder(kappa, gamma)
        observer = _chain(recorder, observer)
    cap = cfg.iteration_cap(n)
    threshold = 10 * n ** 1.5 * gamma
    trace = SolveTrace(parameters={
        "beta": beta, "gamma": gamma, "gamma_overridden": cfg.gamma is not None,
        "term_tol": cfg.term_tol, "max_iters": cap, "lls_threshold": threshold,
    })
    for it in range(cap):
        geom = ScaledGeometry(prob, w)
        aff = affine_direction(prob, w, geom)
        R = aff.residuals
        ident = (float(np.linalg.norm(R.rx + R.rs - geom.v)),
                 float(abs(R.rx @ R.rx + R.rs @ R.rs - n)))
        eps_a = epsilon_measure(R)
        rec = IterationRecord(it, geom.mu, "affine", 0.0, 0.0, 0.0, 0.0, eps_a, affine_identity=ident)
        direction = aff
        if eps_a < threshold:
            lay = layering(geom.delta, kappa, geom.QU, gamma, structure=prob.K,
                           matroid_components=components, fast=cfg.fast_lifting)
            lls = lls_direction(prob, w, lay.partition, geom)
            L = lls.residuals
            eps_ll = epsilon_measure(L)
            rec.kind = "lls"
            rec.eps_lls = eps_ll
            rec.partition = lay.partition
            rec.certificates = lay.certificates
            rec.residual_floor = float(np.min(np.maximum(np.abs(L.rx), np.abs(L.rs))))
            if eps_ll <= cfg.term_tol:
                final = exact_termination_round(prob, w, lls, cfg.term_tol)
                rec.alpha = 1.0
                rec.mu_after = 0.0
                trace.records.append(rec)
                if observer is not None:
                    observer(rec, w, kappa)
                return SolveResult("Optimal", final, float(prob.c @ final.x), it + 1, trace, kappa,
                                   {"eps_lls": eps_ll})
            rec.lls_bound = 1.0 - 3 * math.sqrt(n) * eps_ll / beta
            direction = lls
        alpha = step_length(w, direction, 2 * beta)
        if alpha <= 0.0:
            raise NumericalBreakdown(f"zero step length at iteration {it}")
        wp = point_at(w, direction, alpha)
        rec.alpha = alpha
        rec.mu_after = wp.mu
        rec.gap_predictor = centrality_gap(wp)
        if not wp.mu > 0:
            raise NumericalBreakdown("duality gap vanished without termination")
        corr = centrality_direction(prob, wp)
        wn = Iterate(wp.x + corr.dx, wp.y + corr.dy, wp.s + corr.ds)
        if not (np.all(wn.x > 0) and np.all(wn.s > 0)):
            raise NumericalBreakdown(f"corrector left the positive orthant at iteration {it}")
        rec.gap_corrector = centrality_gap(wn)
        if rec.gap_corrector > 2 * beta + 1e-9:
            raise NumericalBreakdown(f"centrality gap {rec.gap_corrector:.3g} after corrector")
        trace.records.append(rec)
        if observer is not None:
            observer(rec, w, kappa)
        w = wn
    return SolveResult("IterationLimit", w, float(prob.c @ w.x), cap, trace, kappa)


def _potential_recorder(kappa, gamma):
    from .diagnostics import PotentialRecorder
    from .imbalance import CircuitRatioDigraph, max_geometric_mean_cycle

    try:
        t_hat = max_geometric_mean_cycle(CircuitRatioDigraph.from_kappa(kappa))
    except EmptyGraph:
        t_hat = 1.0
    return PotentialRecorder(max(t_hat, 1.0), gamma)


def _chain(first, second):
    if second is None:
        return first

    def both(rec, w, kappa):
        first(rec, w, kappa)
        second(rec, w, kappa)
    return both
