"""How far a column rescaling moves the iterate trajectory.

For each case the solver runs on (A, b, c, w0) and on the rescaled
(A D, b, D c, D^-1 x0, y0, D s0) with the same kappa estimates rescaled.
Central starts on the original data agree to rounding; big-M extended
instances drift because their slacks carry absolute error eps * M.

    python3 scripts/scaling_drift.py --cases 5
"""
import argparse

import numpy as np

from llsip.circuits import find_circuits
from llsip.init import build_extended, initial_point, solve_with_m_search
from llsip.ipm import Iterate, lp_solve


def drift(A, b, c, w0, d):
    fam = find_circuits(A)
    r1 = lp_solve(A, b, c, w0, kappa=fam.kappa, components=fam.components).trace.records
    ws = Iterate(w0.x / d, w0.y, w0.s * d)
    r2 = lp_solve(A * d, b, c * d, ws, kappa=fam.kappa.rescaled(d), components=fam.components).trace.records
    first = next((k for k, (a, e) in enumerate(zip(r1, r2)) if abs(a.mu - e.mu) > 1e-6 * a.mu), None)
    return len(r1), len(r2), first


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--cases", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spread", type=float, default=3.0, help="log10 range of the scaling factors")
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    for t in range(args.cases):
        m, n = 2, 5
        while True:
            A = rng.integers(-3, 4, size=(m, n)).astype(float)
            if np.linalg.matrix_rank(A) == m and not np.any(np.all(A == 0, axis=0)):
                break
        x = np.exp(rng.normal(size=n))
        s = 1.0 / x
        y = rng.normal(size=m)
        b, c = A @ x, A.T @ y + s
        d = 10.0 ** rng.uniform(-args.spread, args.spread, size=n)
        print(f"case {t} central: iterations/first drift", drift(A, b, c, Iterate(x, y, s), d))
        sr = solve_with_m_search(A, b, c)
        if sr.M is None:
            continue
        ext = build_extended(A, b, c, sr.M)
        dd = 10.0 ** rng.uniform(-args.spread, args.spread, size=ext.A.shape[1])
        print(f"case {t} big-M (M = {sr.M:.3g}): iterations/first drift",
              drift(ext.A, ext.b, ext.c, initial_point(A, b, c, sr.M), dd))


if __name__ == "__main__":
    main()
