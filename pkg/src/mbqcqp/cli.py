"""Command-line entry point: ``python3 -m mbqcqp <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 infeasible or
unbounded problem detected.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import bounds, conic, experiments, oracle, relaxation, rounding
from .instance import Field, Instance, InstanceError, Sense, encode_matrix, load_instance

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_INFEASIBLE = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _jf(v):
    # JSON has no inf/nan; write them as strings
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _write(doc: dict, path):
    text = json.dumps(doc, indent=1) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _load(path) -> Instance:
    try:
        return load_instance(path)
    except OSError as exc:
        raise CliError(f"cannot read instance: {exc}", EXIT_INPUT) from None


def _relax(inst: Instance) -> relaxation.RelaxationSolution:
    try:
        return relaxation.solve_relaxation(inst)
    except relaxation.RelaxationError as exc:
        code = EXIT_INFEASIBLE if exc.status in (conic.Status.INFEASIBLE, conic.Status.UNBOUNDED) else EXIT_SOLVER
        raise CliError(str(exc), code) from None


def solution_doc(inst: Instance, sol: relaxation.RelaxationSolution) -> dict:
    problem = (relaxation.build_sdp2_min(inst) if inst.sense is Sense.MINIMIZE else relaxation.build_sdp3_max(inst))
    res = conic.residuals(problem, sol.raw)
    return {
        "which": sol.which.value,
        "status": sol.raw.status.value,
        "value": sol.value,
        "beta": [float(b) for b in sol.beta],
        "X2": encode_matrix(sol.X2, inst.is_complex),
        "iterations": sol.raw.iterations,
        "residuals": {k: float(v) for k, v in res.summary().items()},
    }


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    sol = _relax(inst)
    doc = solution_doc(inst, sol)
    _write(doc, args.out)
    print(f"{doc['which']}  status={doc['status']}  value={sol.value:.10g}  iterations={doc['iterations']}")
    print("beta = " + " ".join(f"{b:.6f}" for b in sol.beta))
    return EXIT_OK


def outcome_doc(inst: Instance, sol, out: rounding.RoundingOutcome) -> dict:
    best = out.best
    feas = None if out.unbounded else rounding.check_feasibility(inst, out.x1, best.x2)
    x2 = [[float(v.real), float(v.imag)] for v in np.asarray(best.x2, dtype=complex)] if inst.is_complex \
        else [float(v) for v in best.x2]
    obj = out.objectives
    return {
        "support": list(out.support.indices),
        "x1": [int(v) for v in out.x1],
        "x2": x2,
        "t": _jf(best.t),
        "objective": _jf(best.objective),
        "v_ubqp": _jf(out.v_ubqp),
        "v_sdp": sol.value,
        "ratio": _jf(out.v_ubqp / sol.value) if sol.value > 0 else None,
        "unbounded": out.unbounded,
        "slacks": None if feas is None else [float(s) for s in feas.slacks],
        "feasible": None if feas is None else feas.feasible,
        "trials": {
            "requested": int(obj.size),
            "attempted": out.trials_attempted,
            "resampled": out.trials_resampled,
            "objective_min": _jf(np.min(obj)),
            "objective_max": _jf(np.max(obj)),
            "objective_mean": _jf(np.mean(obj)),
        },
        "rank": {"before": out.rank_before, "after": out.rank_after},
    }


def cmd_round(args) -> int:
    inst = _load(args.instance)
    if args.trials < 1:
        raise CliError("--trials must be >= 1", EXIT_INPUT)
    sol = _relax(inst)
    try:
        out = rounding.round_relaxation(inst, sol, args.trials, args.seed, reduce_rank=not args.no_rank_reduce)
    except rounding.RoundingError as exc:
        raise CliError(str(exc), EXIT_SOLVER) from None
    doc = outcome_doc(inst, sol, out)
    _write(doc, args.out)
    print(f"support = {doc['support']}  v_sdp = {sol.value:.10g}  v_ubqp = {out.v_ubqp:.10g}  "
          f"ratio = {doc['ratio'] if doc['ratio'] is None else format(out.v_ubqp / sol.value, '.6g')}")
    if out.unbounded:
        print("rounding found an unbounded direction", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_bound(args) -> int:
    inst = _load(args.instance)
    try:
        rep = bounds.bound_for(inst)
    except bounds.NoGuaranteeError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    print(bounds.format_report(rep))
    text = _write(rep.to_dict(), args.out)
    if not args.out:
        print()
        print(text, end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load(args.instance)
    try:
        res = oracle.oracle_value(inst, args.grid)
    except oracle.OracleError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    text = _write(res.to_dict(), args.out)
    print(text, end="")
    if res.status is not oracle.OracleStatus.EXACT_ISH:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        cfg = experiments.ExperimentConfig(
            M=args.M, N=args.N, Q=args.Q, epsilon=args.eps, field=Field(args.field), sense=Sense(args.model),
            realizations=args.realizations, trials=args.trials, seed=args.seed, out_dir=args.out,
            rank_reduce=not args.no_rank_reduce, workers=args.workers,
            oracle_grid=args.oracle_grid)
        report = experiments.run_experiment(cfg)
    except experiments.ExperimentAborted as exc:
        raise CliError(str(exc), EXIT_SOLVER) from None
    paths = experiments.emit_report(report)
    agg = report.aggregates
    print(f"records={agg['count']} excluded={len(report.exclusions)} "
          f"max={agg['max']:.4f} mean={agg['mean']:.4f} std={agg['std']:.4f}")
    for k, p in paths.items():
        print(f"{k}: {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mbqcqp", description="SDP relaxation and randomized rounding for "
                                 "quadratic problems with Q-of-M selected constraints.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the relaxation of an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("round", help="relax and round an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--no-rank-reduce", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_round)

    p = sub.add_parser("bound", help="print the ratio guarantee for an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", help="also write the report here")
    p.set_defaults(fn=cmd_bound)

    p = sub.add_parser("oracle", help="brute-force optimum of an N = 2 instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("experiment", help="Monte-Carlo run over random Gaussian instances")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--Q", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--field", choices=["real", "complex"], required=True)
    p.add_argument("--model", choices=["min", "max"], required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--realizations", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-rank-reduce", action="store_true")
    p.add_argument("--oracle-grid", type=int, default=None)
    p.set_defaults(fn=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches our invalid-input code
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (np.linalg.LinAlgError, conic.ConicError) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
