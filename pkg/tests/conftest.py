import numpy as np
import pytest

from llsip.ipm import Iterate

ACCEPTANCE = {}


# fixtures used repo-wide
F1 = np.array([[1.0, 1.0]])
F2 = np.array([[1.0, 2.0]])
F3 = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
F4_A = np.array([[1.0, 1.0]])
F4_b = np.array([1.0])
F4_c = np.array([1.0, 0.0])


def f4_point():
    return Iterate(np.array([1 / 3, 2 / 3]), np.array([-1.0]), np.array([2.0, 1.0]))


@pytest.fixture
def f4():
    return F4_A, F4_b, F4_c, f4_point()


def random_full_rank(rng, m, n, lo=-3, hi=3, no_zero_cols=True):
    while True:
        A = rng.integers(lo, hi + 1, size=(m, n)).astype(float)
        if no_zero_cols and np.any(np.all(A == 0, axis=0)):
            continue
        if np.linalg.matrix_rank(A) == m:
            return A


def integer_corpus(count=200, seed=20240917):
    """Random integer matrices with entries in [-3, 3], m in [1, 4], n in [m+1, 8], full row rank."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        m = int(rng.integers(1, 5))
        n = int(rng.integers(m + 1, 9))
        out.append(random_full_rank(rng, m, n))
    return out


def central_lp(rng, A, mu=1.0, spread=0.0):
    """(b, c, w) with w exactly central: x s = mu e."""
    m, n = A.shape
    x = np.exp(rng.normal(size=n) * (1 + spread))
    s = mu / x
    y = rng.normal(size=m)
    return A @ x, A.T @ y + s, Iterate(x, y, s)


def random_iterate(rng, A, spread=0.0, centered=False):
    m, n = A.shape
    x = np.exp(rng.normal(size=n) * (1 + spread))
    s = np.exp(rng.normal(size=n) * (1 + spread))
    if centered:
        s = np.exp(rng.normal(size=n) * 0.05) / x
    y = rng.normal(size=m)
    return A @ x, A.T @ y + s, Iterate(x, y, s)


def feasible_lp(rng, m, n, lo=-3, hi=3):
    """Integer A with b = A x0, c = A^T y0 + s0 for sparse nonnegative x0, s0 (bounded optimum)."""
    A = random_full_rank(rng, m, n, lo, hi)
    x0 = rng.integers(0, 3, size=n) * (rng.random(n) < 0.6)
    s0 = rng.integers(0, 3, size=n) * (rng.random(n) < 0.6)
    y0 = rng.integers(-2, 3, size=m)
    return A, (A @ x0).astype(float), (A.T @ y0 + s0).astype(float)


def klee_minty(d=4):
    L = np.zeros((d, d))
    for i in range(d):
        for j in range(i):
            L[i, j] = 2.0 ** (i - j + 1)
        L[i, i] = 1.0
    A = np.hstack([L, np.eye(d)])
    b = np.array([5.0 ** (i + 1) for i in range(d)])
    c = np.concatenate([-np.array([2.0 ** (d - 1 - j) for j in range(d)]), np.zeros(d)])
    return A, b, c


def scaled_residuals(A, b, c, w):
    """Feasibility residuals relative to 1 + the size of the terms involved."""
    nA = np.linalg.norm(A, 2)
    rp = np.linalg.norm(A @ w.x - b) / (1.0 + nA * np.linalg.norm(w.x) + np.linalg.norm(b))
    rd = np.linalg.norm(A.T @ w.y + w.s - c) / (1.0 + nA * np.linalg.norm(w.y) + np.linalg.norm(c))
    return rp, rd


def record(criterion: int, passed: bool, detail: str):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:2d}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)

