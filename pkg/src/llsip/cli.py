"""Command-line front end: llsip {solve,diagnose,rescale,chibar,circuits} INSTANCE.

Instances are JSON documents with dense arrays:

    {"name": "f4", "A": [[1, 1]], "b": [1], "c": [1, 0],
     "warmStart": {"x": [...], "y": [...], "s": [...]}}

Exit codes: 0 on success, 1 on an infeasibility certificate, 2 on errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import numkit
from .circuits import find_circuits
from .config import SolverConfig
from .diagnostics import detect_events
from .errors import DimensionMismatch, LLSError, ParseError, RankDeficient, TooLarge
from .imbalance import chibar_bruteforce, estimate_rescaling, rescaled_matrix
from .init import solve_with_m_search
from .ipm import Iterate, lp_solve

EXIT_OK, EXIT_CERT, EXIT_ERROR = 0, 1, 2


@dataclass
class InstanceFile:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    warm_start: Iterate | None = None
    name: str | None = None

    @property
    def shape(self):
        return self.A.shape


def _vector(doc, key, where=""):
    name = f"'{where}{key}'"
    if key not in doc:
        raise ParseError(f"missing field {name}")
    try:
        v = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {name} is not numeric: {exc}") from None
    if v.ndim != 1:
        raise ParseError(f"field {name} must be a flat array")
    return v


def load_instance(doc: dict, check_rank: bool = True) -> InstanceFile:
    if not isinstance(doc, dict):
        raise ParseError("instance must be an object with fields A, b, c")
    if "A" not in doc:
        raise ParseError("missing field 'A'")
    try:
        A = np.asarray(doc["A"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field 'A' is not a numeric matrix: {exc}") from None
    if A.ndim != 2 or A.size == 0:
        raise ParseError("field 'A' must be a non-empty array of equal-length rows")
    b = _vector(doc, "b")
    c = _vector(doc, "c")
    m, n = A.shape
    if b.size != m:
        raise DimensionMismatch(f"b has length {b.size}, A has {m} rows")
    if c.size != n:
        raise DimensionMismatch(f"c has length {c.size}, A has {n} columns")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ParseError("instance contains non-finite numbers")
    if check_rank and numkit.numerical_rank(A) < m:
        raise RankDeficient(f"A ({m}x{n}) does not have full row rank")
    warm = None
    if doc.get("warmStart") is not None:
        ws = doc["warmStart"]
        if not isinstance(ws, dict):
            raise ParseError("field 'warmStart' must be an object with x, y, s")
        x, y, s = (_vector(ws, k, "warmStart.") for k in ("x", "y", "s"))
        if x.size != n or s.size != n or y.size != m:
            raise DimensionMismatch("warmStart does not match the dimensions of A")
        warm = Iterate(x, y, s)
    return InstanceFile(A, b, c, warm, doc.get("name"))


def parse_instance(path, check_rank: bool = True) -> InstanceFile:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return load_instance(doc, check_rank)


def _num(v):
    if isinstance(v, np.ndarray):
        return [_num(t) for t in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_num(t) for t in v]
    if isinstance(v, dict):
        return {str(k): _num(t) for k, t in v.items()}
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def config_from_args(args) -> SolverConfig:
    return SolverConfig(beta=args.beta, gamma=args.gamma_override, max_iters=args.max_iters,
                        term_tol=args.term_tol, pivot_tol=args.pivot_tol,
                        diagnostics=args.diagnostics)


def _trace_section(solve, diagnostics: bool) -> dict:
    if solve is None:
        return {"muTrajectory": [], "events": []}
    recs = solve.trace.records
    out = {
        "muTrajectory": solve.trace.mu_trajectory,
        "stepKinds": [r.kind for r in recs],
        "events": [{"kind": e.kind, "iteration": e.iteration, "pair": list(e.pair), **e.detail}
                   for e in detect_events(recs)],
        "solverParameters": solve.trace.parameters,
    }
    if diagnostics:
        out["records"] = [{
            "iteration": r.iteration, "mu": r.mu, "kind": r.kind, "alpha": r.alpha,
            "gapPredictor": r.gap_predictor, "gapCorrector": r.gap_corrector,
            "epsAffine": r.eps_affine, "epsLLS": r.eps_lls,
            "partition": [list(L) for L in r.partition] if r.partition else None,
            "certificates": [list(t) for t in r.certificates],
            "potentials": r.potentials,
        } for r in recs]
    return out


def run_solve(inst: InstanceFile, cfg: SolverConfig, big_m=None) -> tuple:
    if inst.warm_start is not None:
        res = lp_solve(inst.A, inst.b, inst.c, inst.warm_start, cfg)
        w = res.iterate
        doc = {"status": res.status, "objective": res.objective, "x": w.x, "y": w.y, "s": w.s,
               "iterations": res.iterations, "start": "warm"}
        doc.update(_trace_section(res, cfg.diagnostics))
        return doc, (EXIT_OK if res.status == "Optimal" else EXIT_ERROR)
    sr = solve_with_m_search(inst.A, inst.b, inst.c, cfg, big_m=big_m)
    doc = {"status": sr.status, "objective": sr.objective, "iterations": sr.solve.iterations if sr.solve else 0,
           "start": "big-M"}
    if sr.iterate is not None:
        doc.update(x=sr.iterate.x, y=sr.iterate.y, s=sr.iterate.s)
    if sr.certificate is not None:
        doc["certificate"] = {"kind": sr.certificate.kind, "witness": sr.certificate.witness,
                              **sr.certificate.report}
    doc["M"] = sr.M
    doc["mu0"] = sr.mu0
    doc["mHistory"] = [{"phase": h.phase, "chibarGuess": h.chibar_guess, "M": h.M,
                        "outcome": h.outcome, "iterations": h.iterations, "n": h.n, "mu0": h.mu0}
                       for h in sr.history]
    doc.update(_trace_section(sr.solve, cfg.diagnostics))
    if sr.status == "Optimal":
        code = EXIT_OK
    elif sr.certificate is not None:
        code = EXIT_CERT
    else:
        code = EXIT_ERROR
    return doc, code


def run_rescale(inst: InstanceFile, cfg: SolverConfig, write=None) -> tuple:
    fam = find_circuits(inst.A, cfg.pivot_tol)
    est = estimate_rescaling(inst.A, fam.kappa)
    doc = {"d": est.d, "tHat": est.t_hat, "xi": est.xi}
    if write:
        # x' = d x turns (A, b, c) into (A / d, b, c / d)
        out = {"name": f"{inst.name or 'instance'}-rescaled", "A": _num(rescaled_matrix(inst.A, est.d)),
               "b": _num(inst.b), "c": _num(inst.c / est.d)}
        with open(write, "w") as fh:
            json.dump(out, fh, indent=1)
        doc["written"] = str(write)
    return doc, EXIT_OK


def run_chibar(inst: InstanceFile, cfg: SolverConfig) -> tuple:
    fam = find_circuits(inst.A, cfg.pivot_tol)
    est = estimate_rescaling(inst.A, fam.kappa)
    doc = {"xi": est.xi, "xiEstimated": True}
    try:
        doc["chibarExact"] = chibar_bruteforce(inst.A)
    except TooLarge:
        doc["chibarExact"] = None
    return doc, EXIT_OK


def run_circuits(inst: InstanceFile, cfg: SolverConfig) -> tuple:
    comps, circs, kappa = find_circuits(inst.A, cfg.pivot_tol)
    doc = {
        "components": [list(C) for C in comps],
        "circuits": [{"support": list(C.support), "g": C.g} for C in circs],
        "kappaHat": [{"i": i, "j": j, "value": v} for (i, j), v in sorted(kappa.items())],
    }
    return doc, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="llsip", description="Layered least-squares interior-point LP solver")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("instance", help="JSON instance file")
    common.add_argument("--beta", type=float, default=0.125)
    common.add_argument("--gamma-override", type=float, default=None)
    common.add_argument("--max-iters", type=int, default=None)
    common.add_argument("--term-tol", type=float, default=1e-11)
    common.add_argument("--pivot-tol", type=float, default=1e-11)
    common.add_argument("--big-m", type=float, default=None)
    common.add_argument("--diagnostics", action="store_true")
    common.add_argument("--output", choices=("json", "text"), default="json")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve the LP")
    sub.add_parser("diagnose", parents=[common], help="solve with potential diagnostics")
    r = sub.add_parser("rescale", parents=[common], help="near-optimal column rescaling")
    r.add_argument("--write", default=None, help="write the rescaled instance here")
    sub.add_parser("chibar", parents=[common], help="estimate (and brute-force) chi-bar")
    sub.add_parser("circuits", parents=[common], help="matroid components, circuits and kappa-hat")
    return p


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(t) for t in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(t)}" for k, t in v.items()) + "}"
    return str(v)


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=1, allow_nan=True)
    lines = []
    for k, v in doc.items():
        if k == "timing":
            continue
        lines.append(f"{k}: {_fmt(v)}")
    for k, v in doc.get("timing", {}).items():
        lines.append(f"timing.{k}: {_fmt(v)}")
    return "\n".join(lines)


def run(argv=None, out=None) -> tuple:
    """Parse arguments, dispatch, print; returns (exit code, document)."""
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = config_from_args(args)
        if args.command == "diagnose":
            cfg.diagnostics = True
        inst = parse_instance(args.instance)
        if args.command in ("solve", "diagnose"):
            result, code = run_solve(inst, cfg, args.big_m)
        elif args.command == "rescale":
            result, code = run_rescale(inst, cfg, args.write)
        elif args.command == "chibar":
            result, code = run_chibar(inst, cfg)
        else:
            result, code = run_circuits(inst, cfg)
        result = {"command": args.command, "name": inst.name, **result,
                  "parameters": {**cfg.as_dict(), "bigM": args.big_m}}
    except LLSError as exc:
        result = {"command": args.command, "status": "Error", "error": type(exc).__name__, "message": str(exc)}
        code = EXIT_ERROR
    doc = _num(result)
    doc["timing"] = {"seconds": time.perf_counter() - t0}
    print(render(doc, args.output), file=out)
    return code, doc


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
