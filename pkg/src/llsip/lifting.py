"""Lifting maps, lifting scores and the Verify-Lift certificate.

A subspace is always passed as a matrix whose columns form an orthonormal
basis. For an index set I, the lift of p in pi_I(W) is the minimum-norm
z in W with z_I = p. Rows of the basis are often scaled very unevenly (the
solver works in Diag(delta) W), so the small systems below are solved by
Householder QR on the transposed rows, whose backward error is row-wise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import numkit
from .errors import NotInProjection

INDEPENDENCE_TOL = 1e-9


@dataclass
class LiftVerdict:
    passed: bool
    i: int | None = None
    j: int | None = None
    t: float | None = None
    max_entry: float = 0.0

    @property
    def outcome(self) -> str:
        return "Pass" if self.passed else "Fail"


@dataclass
class LiftOperator:
    I: list
    Iprime: list
    complement: list
    B: np.ndarray  # coordinates on Iprime -> coordinates on complement


def complement_of(I, n) -> list:
    inI = set(int(i) for i in I)
    return [k for k in range(n) if k not in inI]


def independent_rows(M, rows, tol: float = INDEPENDENCE_TOL) -> list:
    """Greedy maximal independent subset of ``rows`` of M, scanning in the given order."""
    M = np.asarray(M, dtype=float)
    basis = np.zeros((0, M.shape[1]))
    chosen = []
    for r in rows:
        q = M[r]
        nq = np.linalg.norm(q)
        if nq == 0.0:
            continue
        res = q - basis.T @ (basis @ q)
        res = res - basis.T @ (basis @ res)
        nr = np.linalg.norm(res)
        if nr > tol * nq:
            basis = np.vstack([basis, res / nr])
            chosen.append(r)
    return chosen


def _solve_against(Q, Iprime, targets):
    """X = Q[targets] @ pinv(Q[Iprime]) for full-row-rank Q[Iprime]."""
    if not Iprime:
        return np.zeros((len(targets), 0))
    Z, R = scipy.linalg.qr(Q[Iprime].T, mode="economic")
    Y = Q[targets] @ Z
    # Q[Iprime] = R^T Z^T, so X R^T = Y
    return scipy.linalg.solve_triangular(R, Y.T).T


def lift_operator(Q, I, row_order=None, structure=None) -> LiftOperator:
    """The lift restricted to coordinates: z_complement = B p_{I'}.

    ``structure`` is any matrix whose rows have the same linear dependences as
    the rows of Q (e.g. the unscaled kernel basis); I' is selected on it.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    I = sorted(int(i) for i in I)
    Ic = complement_of(I, n)
    order = list(row_order) if row_order is not None else I
    S = Q if structure is None else structure
    Iprime = independent_rows(S, order)
    return LiftOperator(I, Iprime, Ic, _solve_against(Q, Iprime, Ic))


def lift(Q, I, p, tol: float = 1e-9) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    I = list(I)
    p = np.asarray(p, dtype=float).ravel()
    QI = Q[I]
    c, *_ = np.linalg.lstsq(QI, p, rcond=None)
    if np.linalg.norm(QI @ c - p) > tol * max(np.linalg.norm(p), 1e-300):
        raise NotInProjection("p is not in the projection of the subspace")
    z = Q @ c
    z[I] = p
    return z


def lifting_score(Q, I, structure=None) -> float:
    """sqrt(||L_I||^2 - 1) on pi_I(W); 0 when the projection is trivial."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    I = sorted(int(i) for i in I)
    if not I or len(I) == n or Q.shape[1] == 0:
        return 0.0
    op = lift_operator(Q, I, structure=structure)
    if not op.Iprime:
        return 0.0
    rest = [i for i in I if i not in set(op.Iprime)]
    C = _solve_against(Q, op.Iprime, rest)
    # p ranges over {(u, C u)}: ||p||^2 = ||R u||^2 with R from QR of [I; C]
    _, R = np.linalg.qr(np.vstack([np.eye(len(op.Iprime)), C]))
    M = scipy.linalg.solve_triangular(R, op.B.T, trans="T").T
    return numkit.spectral_norm(M)


def verify_lift(Q, I, theta: float, row_order=None, structure=None) -> LiftVerdict:
    """Pass certifies lifting score <= theta; Fail returns (i, j, t) with t = |B_ji| > theta/n."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    op = lift_operator(Q, I, row_order=row_order, structure=structure)
    if op.B.size == 0:
        return LiftVerdict(True)
    absB = np.abs(op.B)
    r, c = np.unravel_index(np.argmax(absB), absB.shape)
    top = float(absB[r, c])
    if n * top <= theta:
        return LiftVerdict(True, max_entry=top)
    return LiftVerdict(False, i=op.Iprime[c], j=op.complement[r], t=top, max_entry=top)


def layered_row_order(components, k: int) -> list:
    """Rows of C_{>=k} ordered C_last, ..., C_k, each increasing."""
    order = []
    for comp in reversed(components[k:]):
        order.extend(sorted(comp))
    return order


def verify_lift_suffixes(Q, components, theta: float, structure=None) -> list:
    """Verify-Lift on every suffix C_{>=k}, k = 2..len(components), from one factorization.

    Rows are selected in the order C_last, ..., C_2, so the selected set of
    each suffix is a prefix of the selection for C_{>=2} and the triangular
    factor of the largest system serves all of them. Verdicts agree with
    ``verify_lift(Q, C_{>=k}, theta, row_order=layered_row_order(components, k))``.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    ell = len(components)
    if ell < 2:
        return []
    S = Q if structure is None else structure
    order = layered_row_order(components, 1)
    sel = independent_rows(S, order)
    if sel:
        Z, R = scipy.linalg.qr(Q[sel].T, mode="economic")
    verdicts = []
    for k in range(1, ell):
        suffix = set(r for comp in components[k:] for r in comp)
        rk = sum(1 for r in sel if r in suffix)
        if rk == 0:
            verdicts.append(LiftVerdict(True))
            continue
        Ic = complement_of(suffix, n)
        Y = Q[Ic] @ Z[:, :rk]
        B = scipy.linalg.solve_triangular(R[:rk, :rk], Y.T).T
        absB = np.abs(B)
        r, c = np.unravel_index(np.argmax(absB), absB.shape)
        top = float(absB[r, c])
        if n * top <= theta:
            verdicts.append(LiftVerdict(True, max_entry=top))
        else:
            verdicts.append(LiftVerdict(False, i=sel[c], j=Ic[r], t=top, max_entry=top))
    return verdicts


def partition_lifting_score(W, delta, partition) -> float:
    """max over k >= 2 of the lifting score of J_{>=k} in Diag(delta) W."""
    W = np.asarray(W, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if len(partition) < 2:
        return 0.0
    Q = numkit.orthonormal_range(delta[:, None] * W, rank=W.shape[1])
    best = 0.0
    for k in range(1, len(partition)):
        suffix = [i for layer in partition[k:] for i in layer]
        best = max(best, lifting_score(Q, suffix, structure=W))
    return best
