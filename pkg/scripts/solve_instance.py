"""Solve a JSON instance and print a short summary of the trace.

    python3 scripts/solve_instance.py scripts/instances/klee_minty4.json
"""
import argparse
import json
from collections import Counter

import numpy as np

from llsip.cli import load_instance
from llsip.init import solve_with_m_search
from llsip.ipm import lp_solve


def main():
    p = argparse.ArgumentParser()
    p.add_argument("instance")
    p.add_argument("--cold", action="store_true", help="ignore any warm start and use the big-M search")
    args = p.parse_args()
    with open(args.instance) as fh:
        inst = load_instance(json.load(fh))
    if inst.warm_start is not None and not args.cold:
        res = lp_solve(inst.A, inst.b, inst.c, inst.warm_start)
        x, status, trace = res.iterate.x, res.status, res.trace
    else:
        sr = solve_with_m_search(inst.A, inst.b, inst.c)
        status = sr.status
        x = sr.iterate.x if sr.iterate is not None else None
        trace = sr.solve.trace if sr.solve is not None else None
        print(f"chi-bar guesses {sr.guesses}, M = {sr.M}")
    print(f"{inst.name or args.instance}: {status}")
    if x is not None:
        print("x =", np.array2string(x, precision=6))
        print("objective =", float(inst.c @ x))
    if trace is not None:
        kinds = Counter(r.kind for r in trace.records)
        print(f"{len(trace.records)} iterations: {dict(kinds)}")


if __name__ == "__main__":
    main()
