"""Command-line front end.

Subcommands::

    dairyplan generate --size small --seed 7 --out runs/gen
    dairyplan solve INSTANCE --method ga|exact --out runs/solve
    dairyplan audit INSTANCE SOLUTION
    dairyplan export INSTANCE --format lp|mps --out runs/model
    dairyplan sweep INSTANCE --parameter crrate --values 0.2,0.5,0.8 --out runs/sweep

``INSTANCE`` is an instance file or the literal ``case-study``. Every command
that writes files also writes ``manifest.json`` holding the resolved
arguments, the package and library versions and a digest of each output.
Wall-clock timings are kept apart in ``timings.json`` so that all other
files are byte-identical across repeated runs.

Exit codes: 0 success, 1 plan infeasible (audit), 2 usage error,
3 validation error, 4 budget exhausted before optimality was proven.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .case_study import DC_NAMES, PRODUCTS, case_study
from .errors import DairyPlanError, EnumerationLimitError, ValidationError
from .fileio import read_instance, write_instance
from .ga import GAConfig
from .ga import run as run_ga
from .generator import TINY_OVERRIDES, GenSpec, generate
from .instance import RobustConfig
from .lpexport import export_lp
from .oracle import OracleBudget, solve_exact
from .options import ModelOptions
from .solution import PlanSolution
from .validator import audit, format_production_table, format_route_table, production_table

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_VALIDATION, EXIT_BUDGET = 0, 1, 2, 3, 4
CASE_STUDY = "case-study"
SWEEP_PARAMETERS = ("crrate", "shelflife", "alpha")


class UsageError(DairyPlanError):
    pass


class BudgetExhausted(DairyPlanError):
    pass


# ------------------------------------------------------------------ helpers

def _dump(obj):
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions():
    return {"dairyplan": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(out, command, args, outputs, extra=None):
    record = {"command": command, "arguments": args, "versions": versions(),
              "outputs": {Path(p).name: _sha256(p) for p in sorted(outputs)}}
    if extra:
        record.update(extra)
    (out / "manifest.json").write_text(_dump(record))


def load_instance(source):
    """``(instance, robust block or None)`` from a file or the case-study keyword."""
    if source == CASE_STUDY:
        return case_study(), None
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"instance file not found: {source}")
    return read_instance(path, with_robust=True)


def robust_from_args(instance, file_robust, alpha, gamma):
    """Robust block of the file, with ``--alpha``/``--gamma`` applied on top.

    Without a block in the file, ``--alpha`` builds one from nominal demand.
    """
    if alpha is None and (file_robust is None or gamma is None):
        return file_robust
    if file_robust is None:
        return RobustConfig.from_demand(instance, alpha, 1.0 if gamma is None else gamma)
    changes = {}
    if alpha is not None:
        changes["alpha"] = alpha
    if gamma is not None:
        changes["gamma"] = gamma
    return dataclasses.replace(file_robust, **changes)


def parse_overrides(items):
    out = {}
    for item in items or ():
        try:
            key, rng = item.split("=")
            lo, hi = (float(x) for x in rng.split(":"))
        except ValueError:
            raise UsageError(f"override {item!r} is not KEY=LOW:HIGH") from None
        out[key] = (lo, hi)
    return out


def parse_values(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse values {text!r}") from None
    if not values:
        raise UsageError("the value list is empty")
    return values


def ga_config(args):
    return GAConfig(population_size=args.population, p_cross=args.p_cross, p_mut=args.p_mut,
                    max_generations=args.generations, no_improve_limit=args.no_improve,
                    seed=args.seed, decoder_mode=args.decoder, operator_schedule=args.schedule)


def budget_of(args):
    return OracleBudget(max_nodes=args.budget_nodes, max_seconds=args.budget_seconds)


def solve(instance, robust, method, args, options):
    """``(solution, value, info, timing)``; ``info`` holds only reproducible fields."""
    if method == "ga":
        res = run_ga(instance, ga_config(args), robust)
        info = {"decoder_used": res.decoder_used, "generations": res.generations,
                "evaluations": res.evaluations, "proven_optimal": False}
        return res.best_solution, res.best_value, info, res.wall_time, res
    res = solve_exact(instance, robust, budget_of(args), options)
    info = {"proven_optimal": res.proven_optimal, "nodes_explored": res.nodes_explored,
            "leaves_solved": res.leaves_solved}
    return res.best_solution, res.best_value, info, res.wall_time, res


def plan_statistics(instance, solution, robust):
    """Per-day means of total QB and II, mean UnmD per (DC, day, product)."""
    if solution is None:
        return {"mean_QB": None, "mean_II": None, "mean_UnmD": None, "robust_penalty": None}
    pen = robust.penalty(instance) if robust is not None else 0.0
    return {"mean_QB": float(solution.QB.sum(axis=0).mean()),
            "mean_II": float(solution.II.sum(axis=0).mean()),
            "mean_UnmD": float(solution.UnmD[1:].mean()),
            "robust_penalty": float(pen)}


def production_csv(instance, solution, names=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["line", "product"] + [f"period_{i + 1}" for i in range(instance.num_production_days)])
    for q, j, kg in sorted(production_table(instance, solution), key=lambda r: (r[1], r[0])):
        w.writerow([j + 1, names[q] if names else q] + [f"{x:.6g}" for x in kg])
    return buf.getvalue()


def routes_csv(table, names=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["period", "route", "served", "number", "total"])
    for e in table.entries:
        if e.stops:
            served = ";".join(names[s.dc] if names else str(s.dc) for s in e.stops)
            w.writerow([e.day + 1, e.vehicle + 1, served, e.num_served, f"{e.total:.6g}"])
    return buf.getvalue()


def _out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out}: {exc}", field="out") from None
    return out


def _resolved(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "jobs")}


# ------------------------------------------------------------------ commands

def cmd_generate(args):
    overrides = dict(TINY_OVERRIDES) if args.tiny else {}
    overrides.update(parse_overrides(args.override))
    inst = generate(GenSpec(args.size, args.seed, overrides))
    out = _out_dir(args.out)
    path = out / "instance.json"
    write_instance(inst, path)
    write_manifest(out, "generate", _resolved(args), [path], {"overrides": overrides})
    print(f"wrote {path} ({inst.name}: " + ", ".join(f"{k}={v}" for k, v in inst.dims.items()) + ")")
    return EXIT_OK


def cmd_solve(args):
    inst, file_robust = load_instance(args.instance)
    robust = robust_from_args(inst, file_robust, args.alpha, args.gamma)
    options = ModelOptions(paper_strict=args.paper_strict)
    out = _out_dir(args.out)
    sol, value, info, wall, res = solve(inst, robust, args.method, args, options)
    outputs = []
    summary = {"method": args.method, "instance": inst.name,
               "value": value if np.isfinite(value) else None, **info}
    if sol is not None:
        rep = audit(inst, sol, robust, options)
        summary.update(feasible=rep.feasible, violated_constraints=list(rep.violated_ids),
                       objective=rep.objective.as_dict(), statistics=plan_statistics(inst, sol, robust))
        names = PRODUCTS if args.instance == CASE_STUDY else None
        dcs = DC_NAMES if args.instance == CASE_STUDY else None
        files = {"solution.json": _dump(sol.to_dict()),
                 "production.txt": format_production_table(inst, sol, names),
                 "production.csv": production_csv(inst, sol, names),
                 "routes.txt": format_route_table(rep.routes, dcs),
                 "routes.csv": routes_csv(rep.routes, dcs)}
        if args.method == "ga":
            files["generations.jsonl"] = res.log_lines()
        for name, text in files.items():
            (out / name).write_text(text)
            outputs.append(out / name)
    else:
        summary["feasible"] = False
    (out / "summary.json").write_text(_dump(summary))
    outputs.append(out / "summary.json")
    (out / "timings.json").write_text(_dump({"wall_time_s": wall}))
    inputs = {} if args.instance == CASE_STUDY else {"instance_sha256": _sha256(args.instance)}
    write_manifest(out, "solve", _resolved(args), outputs, inputs)
    print(f"{args.method}: Z = {value:.6f}" + ("" if sol is None else f", feasible = {summary['feasible']}"))
    if sol is not None and args.instance == CASE_STUDY:
        print(format_production_table(inst, sol, PRODUCTS))
        print(format_route_table(rep.routes, DC_NAMES))
    if args.method == "exact" and not info["proven_optimal"]:
        raise BudgetExhausted(f"budget exhausted after {info['nodes_explored']} nodes; "
                              "incumbent written but not proven optimal")
    return EXIT_OK


def cmd_audit(args):
    inst, file_robust = load_instance(args.instance)
    robust = robust_from_args(inst, file_robust, args.alpha, args.gamma)
    try:
        data = json.loads(Path(args.solution).read_text())
        sol = PlanSolution.from_dict(data)
        sol.check_dims(inst)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ValidationError(f"unreadable solution file {args.solution}: {exc}", field="solution") from None
    rep = audit(inst, sol, robust, ModelOptions(paper_strict=args.paper_strict))
    if args.out:
        out = _out_dir(args.out)
        (out / "audit.json").write_text(rep.to_json())
        write_manifest(out, "audit", _resolved(args), [out / "audit.json"])
    print(f"feasible: {rep.feasible}")
    print(f"objective: {rep.objective.total:.6f}")
    if not rep.feasible:
        print("violated constraints: " + ", ".join(rep.violated_ids))
        for r in rep.reports[:args.show]:
            print(f"  {r.constraint_id} {r.index_tuple}: lhs={r.lhs:.6g} rhs={r.rhs:.6g} violation={r.violation:.6g}")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_export(args):
    inst, file_robust = load_instance(args.instance)
    robust = robust_from_args(inst, file_robust, args.alpha, args.gamma)
    out = _out_dir(args.out)
    path = out / f"model.{args.format}"
    info = export_lp(inst, robust, path, args.format, ModelOptions(paper_strict=args.paper_strict))
    write_manifest(out, "export", _resolved(args), [path, path.with_name(path.name + ".map.json")],
                   {"model": info})
    print(f"wrote {path}: {info['num_vars']} columns ({info['num_binaries']} binary), "
          f"{info['num_constraints']} rows")
    return EXIT_OK


def sweep_point(inst, file_robust, parameter, value, args):
    """One sweep row plus its wall time; independent of every other point."""
    options = ModelOptions(paper_strict=args.paper_strict)
    robust = robust_from_args(inst, file_robust, args.alpha, args.gamma)
    if parameter == "crrate":
        inst = inst.with_params(CrRate=np.full(inst.num_products, value))
    elif parameter == "shelflife":
        inst = inst.with_params(ShelfLife=np.full(inst.num_products, value))
    else:
        robust = robust_from_args(inst, file_robust, value, args.gamma)
    sol, Z, info, wall, _ = solve(inst, robust, args.method, args, options)
    row = {"value": value, "Z": Z if np.isfinite(Z) else None, **plan_statistics(inst, sol, robust), **info}
    return row, wall


def _sweep_job(payload):
    return sweep_point(*payload)


def check_sweep_values(parameter, values):
    for v in values:
        if parameter in ("crrate", "alpha") and not 0.0 <= v <= 1.0:
            raise UsageError(f"{parameter} value {v} outside [0, 1]")
        if parameter == "shelflife" and v <= 0:
            raise UsageError(f"shelf life {v} must be positive")


def cmd_sweep(args):
    values = parse_values(args.values)
    check_sweep_values(args.parameter, values)
    inst, file_robust = load_instance(args.instance)
    out = _out_dir(args.out)
    payloads = [(inst, file_robust, args.parameter, v, args) for v in values]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_job, payloads))
    else:
        results = [_sweep_job(p) for p in payloads]
    rows = [r for r, _ in results]
    cols = ["value", "Z", "mean_QB", "mean_II", "mean_UnmD", "robust_penalty"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    (out / "sweep.csv").write_text(buf.getvalue())
    (out / "sweep.json").write_text(_dump({"parameter": args.parameter, "method": args.method,
                                           "instance": inst.name, "rows": rows}))
    (out / "timings.json").write_text(_dump({"time_s": {repr(v): t for v, (_, t) in zip(values, results)}}))
    write_manifest(out, "sweep", _resolved(args), [out / "sweep.csv", out / "sweep.json"])
    for r in rows:
        print(f"{args.parameter}={r['value']:g}: Z={r['Z']} mean UnmD={r['mean_UnmD']}")
    if args.method == "exact" and not all(r["proven_optimal"] for r in rows):
        raise BudgetExhausted("budget exhausted on at least one sweep point")
    return EXIT_OK


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_model_flags(p):
    p.add_argument("--alpha", type=float, default=None, help="satisfaction level of the robust demand row")
    p.add_argument("--gamma", type=float, default=None, help="penalty weight of the robust allowance")
    p.add_argument("--paper-strict", action="store_true",
                   help="tour equalities and the single global big-M")


def _add_solver_flags(p):
    p.add_argument("--method", choices=("ga", "exact"), default="ga")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget-seconds", type=float, default=3600.0)
    p.add_argument("--budget-nodes", type=int, default=None)
    p.add_argument("--decoder", choices=("pbd", "pba", "both"), default="both")
    p.add_argument("--schedule", choices=("figure2", "section519"), default="figure2")
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--generations", type=int, default=300)
    p.add_argument("--no-improve", type=int, default=100)
    p.add_argument("--p-cross", type=float, default=0.8)
    p.add_argument("--p-mut", type=float, default=0.2)


def build_parser():
    parser = _Parser(prog="dairyplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dairyplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="draw a seeded random instance")
    p.add_argument("--size", choices=("small", "medium", "large"), default="small")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tiny", action="store_true", help="shrink to exact-oracle scale")
    p.add_argument("--override", action="append", metavar="KEY=LOW:HIGH",
                   help="replace a set or parameter range (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve with the genetic algorithm or the exact oracle")
    p.add_argument("instance")
    _add_solver_flags(p)
    _add_model_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("audit", help="check a solution file against every constraint")
    p.add_argument("instance")
    p.add_argument("solution")
    _add_model_flags(p)
    p.add_argument("--show", type=int, default=20, help="violations to print")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("export", help="write the linear model as LP or MPS")
    p.add_argument("instance")
    p.add_argument("--format", choices=("lp", "mps"), default="lp")
    _add_model_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("sweep", help="re-solve over values of one parameter")
    p.add_argument("instance")
    p.add_argument("--parameter", choices=SWEEP_PARAMETERS, required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    _add_solver_flags(p)
    _add_model_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except EnumerationLimitError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValidationError, DairyPlanError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
