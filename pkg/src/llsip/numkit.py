"""Small dense linear-algebra kernel.

Everything downstream (circuits, lifting, the interior-point engine) works on
plain ``numpy`` arrays; this module collects the factorizations they share.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateBasis, RankDeficient

PIVOT_TOL = 1e-11
# relative slack used to call two pivot scores equal
TIE_TOL = 1e-9


def as_matrix(A) -> np.ndarray:
    M = np.array(A, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


@dataclass
class EliminationResult:
    """Gauss-Jordan form of a full-row-rank matrix.

    ``reduced[:, basis]`` is the identity; row ``r`` of ``reduced`` belongs to
    basis column ``basis[r]`` (``basis`` is sorted). ``pivots`` records the
    (row, column) choices in the order they were made, in original row labels.
    """

    basis: list
    reduced: np.ndarray
    pivots: list = field(default_factory=list)

    @property
    def nonbasis(self) -> list:
        inb = set(self.basis)
        return [j for j in range(self.reduced.shape[1]) if j not in inb]

    @property
    def row_of(self) -> dict:
        return {b: r for r, b in enumerate(self.basis)}

    def H(self) -> np.ndarray:
        return self.reduced[:, self.nonbasis]


def row_reduce(A, pivot_tol: float = PIVOT_TOL) -> EliminationResult:
    """Gauss-Jordan elimination with a column-scaling-invariant pivot rule.

    At each step the pivot maximizes ``|entry| / ||active part of its column||``;
    near-ties go to the smallest column, then smallest row.
    """
    M = as_matrix(A).copy()
    m, n = M.shape
    colscale = np.max(np.abs(M), axis=0)
    free_rows = list(range(m))
    used = np.zeros(n, dtype=bool)
    pivots = []
    for _ in range(m):
        sub = M[free_rows]
        norms = np.linalg.norm(sub, axis=0)
        absub = np.abs(sub)
        nonzero = absub > pivot_tol * colscale
        nonzero[:, used] = False
        if not nonzero.any():
            raise RankDeficient(
                f"numerical rank {len(pivots)} < {m} rows (pivot tolerance {pivot_tol:g})"
            )
        score = np.where(nonzero, absub / np.where(norms > 0, norms, 1.0), -1.0)
        best = score.max()
        cand = np.argwhere(score >= best * (1.0 - TIE_TOL))
        # argwhere is row-major; pick smallest column, then smallest row
        k = min(cand.tolist(), key=lambda rc: (rc[1], rc[0]))
        r, c = free_rows[k[0]], k[1]
        M[r] /= M[r, c]
        for q in range(m):
            if q != r and M[q, c] != 0.0:
                M[q] -= M[q, c] * M[r]
        M[:, c] = 0.0
        M[r, c] = 1.0
        used[c] = True
        free_rows.remove(r)
        pivots.append((r, c))
    order = sorted(pivots, key=lambda rc: rc[1])
    basis = [c for _, c in order]
    reduced = M[[r for r, _ in order]]
    # A_v = sum_r H[r, v] A_{basis[r]}; drop terms that are negligible next to A_v
    colnorm = np.linalg.norm(as_matrix(A), axis=0)
    contrib = np.abs(reduced) * colnorm[basis][:, None]
    reduced[contrib <= pivot_tol * colnorm[None, :]] = 0.0
    reduced[:, basis] = np.eye(m)
    return EliminationResult(basis=basis, reduced=reduced, pivots=pivots)


def numerical_rank(M, rtol: float = 1e-12) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def kernel_basis(A, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of ker(A) for full-row-rank A."""
    A = as_matrix(A)
    m, n = A.shape
    if m > n:
        raise RankDeficient(f"{m} rows cannot have full row rank with {n} columns")
    row_reduce(A, pivot_tol)  # rank check with the shared pivot rule
    _, _, Vt = np.linalg.svd(A, full_matrices=True)
    K = Vt[m:].T.copy()
    # coloops vanish on the kernel; make their rows exactly zero
    for i in range(n):
        if column_rank(A, [j for j in range(n) if j != i]) < m:
            K[i] = 0.0
    return K


def equilibrated_kernel_basis(A, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Basis of ker(A) computed on the column-normalized matrix, then unscaled.

    Not orthonormal. Scaling a column of A scales the matching row of the
    result inversely, with rounding that does not depend on the scaling.
    """
    A = as_matrix(A)
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    return kernel_basis(A / norms, pivot_tol) / norms[:, None]


def sorted_qr(M):
    """Column-pivoted QR of ``M`` after sorting rows by decreasing norm.

    Returns ``(Q, R, perm)`` with ``Q`` rows already put back in the original
    order, so that ``M[:, perm] = Q @ R``. Sorting keeps the row-wise backward
    error proportional to each row's size, which matters for badly scaled rows.
    """
    M = np.asarray(M, dtype=float)
    order = np.argsort(-np.linalg.norm(M, axis=1), kind="stable")
    Qs, R, perm = scipy.linalg.qr(M[order], mode="economic", pivoting=True)
    Q = np.empty_like(Qs)
    Q[order] = Qs
    return Q, R, perm


def orthonormal_range(M, rank: int | None = None) -> np.ndarray:
    """Orthonormal basis of range(M) robust to badly scaled rows."""
    M = np.asarray(M, dtype=float)
    n, k = M.shape
    if k == 0 or n == 0:
        return np.zeros((n, 0))
    Q, R, _ = sorted_qr(M)
    if rank is None:
        d = np.abs(np.diag(R))
        rank = int(np.sum(d > 1e-13 * d[0])) if d.size and d[0] > 0 else 0
    return Q[:, :rank].copy()


def column_rank(A, cols, rtol: float = 1e-10) -> int:
    """Rank of A[:, cols], insensitive to the scaling of individual columns."""
    A = np.asarray(A, dtype=float)
    cols = list(cols)
    if not cols:
        return 0
    sub = A[:, cols]
    norms = np.linalg.norm(sub, axis=0)
    keep = norms > 0
    if not keep.any():
        return 0
    return numerical_rank(sub[:, keep] / norms[keep], rtol)


def null_space(M, dim: int | None = None, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of ker(M); ``dim`` forces the dimension when known."""
    M = np.asarray(M, dtype=float)
    r, k = M.shape
    if k == 0:
        return np.zeros((0, 0))
    if r == 0:
        return np.eye(k)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    if dim is None:
        rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
        dim = k - rank
    return Vt[k - dim:].T.copy()


def spectral_norm(M) -> float:
    """Largest singular value; 0 for empty matrices."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def min_norm_solution(A, b, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """The solution of Ad = b orthogonal to ker(A)."""
    A = as_matrix(A)
    b = np.asarray(b, dtype=float).ravel()
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"b has length {b.shape[0]}, expected {A.shape[0]}")
    row_reduce(A, pivot_tol)
    if not np.any(b):
        return np.zeros(A.shape[1])
    d, *_ = np.linalg.lstsq(A, b, rcond=None)
    # one refinement step against the residual
    r = b - A @ d
    d += np.linalg.lstsq(A, r, rcond=None)[0]
    return d


def constrained_least_squares(weight, target, free_basis, fixed_part=None, rtol: float = 1e-12):
    """Coefficients z minimizing ||weight * (target + fixed_part + free_basis @ z)||."""
    w = np.asarray(weight, dtype=float).ravel()
    t = np.asarray(target, dtype=float).ravel()
    if fixed_part is not None:
        t = t + np.asarray(fixed_part, dtype=float).ravel()
    F = np.asarray(free_basis, dtype=float).reshape(t.size, -1)
    if F.shape[1] == 0:
        return np.zeros(0)
    WF = w[:, None] * F
    if numerical_rank(WF, rtol) < F.shape[1]:
        raise DegenerateBasis("free basis columns are linearly dependent")
    z, *_ = np.linalg.lstsq(WF, -w * t, rcond=None)
    return z
