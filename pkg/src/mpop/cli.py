"""Command line interface.

Subcommands: gen, derive, solve, exact, sensitivity, report, experiment.
Exit codes: 0 ok, 1 error (bad input, parse failure, usage), 2 guard
(size limit exceeded, infeasible without fallback).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from . import instances as ik
from . import report as rp
from .core import metrics
from .exact import export_lp, solve_exact
from .experiment import (GEN_PRESETS, build_model, collect_rows, config_hash,
                         generate_preset, load_config, run_experiment)
from .scoring import VARIANTS
from .sensitivity import evaluate_under_scenario, scenario_grid
from .solver import SolverConfig, derive_seed, solve_best_of

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GUARD = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _load_instance(path):
    try:
        return ik.load_instance(path)
    except json.JSONDecodeError as exc:
        raise SystemExit(f"error: malformed instance JSON {path}: line {exc.lineno} "
                         f"column {exc.colno}: {exc.msg}") from None
    except FileNotFoundError:
        raise SystemExit(f"error: instance file not found: {path}") from None


def _add_model_flags(p: _Parser):
    p.add_argument("--model", required=True, choices=[v.lower() for v in VARIANTS])
    p.add_argument("--wabc-weights", default="15,5,1",
                   help="comma separated A,B,C weights for wABC")
    p.add_argument("--wabc-class-means", action="store_true",
                   help="derive wABC weights from per-class mean scores")
    p.add_argument("--manual-ids", default=None, help="comma separated MNS manual ids")
    p.add_argument("--manual-top", type=int, default=0,
                   help="MNS: make the next K score ranks mandatory")
    p.add_argument("--extra-ids", default=None, help="comma separated MWS extra ids")
    p.add_argument("--extra-top", type=int, default=0,
                   help="MWS: make the next K score ranks mandatory")
    p.add_argument("--extra-random", type=int, default=0,
                   help="MWS: make K seeded-random optional customers mandatory")
    p.add_argument("--fallback", action="store_true",
                   help="MWS: relax mandatory customers when infeasible")


def _split_ids(raw):
    if raw is None:
        return None
    return [v for v in raw.split(",") if v]


def _model_from_args(instance, args):
    weights = tuple(float(v) for v in args.wabc_weights.split(","))
    if len(weights) != 3:
        raise SystemExit("error: --wabc-weights needs exactly three values")
    return build_model(instance, args.model, wabc_weights=weights,
                       wabc_class_means=args.wabc_class_means,
                       manual_ids=_split_ids(args.manual_ids),
                       extra_ids=_split_ids(args.extra_ids),
                       manual_top=args.manual_top, extra_top=args.extra_top,
                       extra_random=args.extra_random, fallback=args.fallback)


def _args_hash(args: argparse.Namespace) -> str:
    """Hash of the content-relevant arguments (output locations excluded, so a
    rerun into a different directory produces identical artifact bytes)."""
    skip = {"func", "out", "lp"}
    return config_hash({k: v for k, v in sorted(vars(args).items()) if k not in skip})


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chash = _args_hash(args)
    for i in range(args.count):
        if args.preset:
            inst = generate_preset(args.preset, i, args.seed, rescore=args.rescore)
        else:
            cfg = ik.GenConfig(
                n_customers=args.n, horizon_days=args.days,
                service_range=(args.service_min, args.service_max),
                score_mode=("uniform", args.score_lo, args.score_hi),
                mandatory_count=args.mandatory, max_daily_minutes=args.tmax,
                square_side=args.square,
                rng_seed=derive_seed(args.seed, f"gen:custom-{i:03d}"),
                name=f"{args.name}-{i:03d}")
            inst = ik.synthesize(cfg)
        ik.save_instance(inst, out / f"{inst.name}.json",
                         meta={"config_hash": chash, "seed": args.seed})
    print(f"wrote {args.count} instance(s) to {out}")
    return EXIT_OK


def cmd_derive(args) -> int:
    inst = _load_instance(args.infile)
    chash = _args_hash(args)
    if args.abc:
        inst = ik.classify_instance(inst, rng_seed=args.seed)
    if args.mandatory is not None:
        inst = ik.with_mandatory(inst, ik.select_mandatory(inst, args.mandatory))
    if args.rescore:
        lo, hi = (float(v) for v in args.rescore.split(","))
        inst = ik.rescore_uniform(inst, lo, hi, rng_seed=args.seed)
    if args.subsample:
        n, m, d = (int(v) for v in args.subsample.split(","))
        inst = ik.subsample_small(inst, n, m, d, rng_seed=args.seed)
    ik.save_instance(inst, args.out, meta={"config_hash": chash, "seed": args.seed})
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    model = _model_from_args(inst, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chash = _args_hash(args)
    cfg = SolverConfig(stop_stagnation=args.stagnation, max_wall_ms=args.time_limit_ms)
    best, best_stats, all_stats = solve_best_of(inst, model, runs=args.runs,
                                                rng_seed=args.seed, config=cfg)
    meta = {"config_hash": chash, "seed": args.seed, "model": model.variant,
            "instance": inst.name}
    for r, st in enumerate(all_stats):
        ik.dump_json({"meta": meta, **st.to_dict()}, out / f"run_{r:02d}.stats.json")
    if best is None:
        print("infeasible: mandatory set cannot be scheduled (no fallback)")
        return EXIT_GUARD
    ik.save_solution(best, out / "best.solution.json", meta=meta)
    m = metrics(best, inst)
    print(f"best objective {best_stats.objective:.6g}, travel {best_stats.total_travel:.6g} min, "
          f"share visited {m['share_visited']:.3f}")
    return EXIT_OK


def cmd_exact(args) -> int:
    inst = _load_instance(args.instance)
    model = _model_from_args(inst, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chash = _args_hash(args)
    meta = {"config_hash": chash, "seed": 0, "model": model.variant, "instance": inst.name}
    if args.lp:
        Path(args.lp).write_text(export_lp(inst, model))
        print(f"wrote {args.lp}")
    res = solve_exact(inst, model, size_limit=args.size_limit)
    doc = {"meta": meta, "status": res.status, "objective": res.objective,
           "total_travel": res.total_travel,
           "enumerated_assignments": res.enumerated_assignments,
           "fallback_used": res.fallback_used}
    ik.dump_json(doc, out / f"{model.variant}.result.json")
    if res.status == "SizeExceeded":
        print(f"size exceeded: {inst.n_customers} customers > limit {args.size_limit}")
        return EXIT_GUARD
    if res.status == "Infeasible":
        print("infeasible: mandatory set cannot be scheduled")
        return EXIT_GUARD
    ik.save_solution(res.solution, out / f"{model.variant}.solution.json", meta=meta)
    print(f"optimal objective {res.objective:.6g}, travel {res.total_travel:.6g} min "
          f"({res.enumerated_assignments} visit-sets)")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    inst = _load_instance(args.instance)
    sol_dir = Path(args.solutions)
    solutions = {}
    for path in sorted(sol_dir.glob("*.solution.json")):
        doc = json.loads(path.read_text())
        if "tours" in doc:
            solutions[path.name.split(".")[0]] = ik.solution_from_dict(doc)
    if "WS" not in solutions:
        raise SystemExit(f"error: no WS solution found under {sol_dir}")
    levels = [float(v) for v in args.levels.split(",")] if args.levels else None
    rows = []
    for scen in scenario_grid(inst, coe_levels=levels,
                              scenarios_per_level=args.per_level, rng_seed=args.seed):
        result = evaluate_under_scenario(solutions, scen, inst)
        for model in sorted(result):
            rows.append([inst.name, model, scen.coe, scen.scenario_index,
                         result[model]["realized_sim"], result[model]["rws_sim"]])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "model", "coe", "scenario", "realized_sim", "rws_sim"])
        for row in rows:
            writer.writerow(["" if v is None else (format(v, ".12g")
                             if isinstance(v, float) else v) for v in row])
    print(f"wrote {len(rows)} sensitivity rows to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.runs)
    inst_paths = sorted((run_dir / "instances").glob("*.json"))
    if not inst_paths:
        raise SystemExit(f"error: no instances under {run_dir / 'instances'}")
    rows = collect_rows(run_dir, inst_paths)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rp.write_rows_csv(rows, out / "raw.csv")
    selected = [r for r in rows if r.run_id in rp.SELECTED_RUN_IDS]
    rp.compute_rns_rws(selected)
    kept = rp.filter_instances(selected)
    if kept:
        records = rp.aggregate(kept, group_by=("run_id", "model"))
        rp.write_summary(records, out / "summary.csv", out / "summary.json")
        print(f"wrote raw.csv ({len(rows)} rows) and summary over {len(kept)} selected rows")
    else:
        print(f"wrote raw.csv ({len(rows)} rows); no instance group survived filtering")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out) if args.out else Path(cfg.get("out", "experiment-out"))
    summary = run_experiment(cfg, out, jobs=args.jobs)
    print(f"experiment complete: {summary['instances']} instances, "
          f"{len(summary['failures'])} failures, {summary['rows']} report rows")
    return EXIT_ERROR if summary["failures"] else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="mpop", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mpop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="generate synthetic instances")
    p.add_argument("--preset", choices=sorted(GEN_PRESETS), default=None)
    p.add_argument("--rescore", choices=["", "low", "high"], default="")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="custom")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--days", type=int, default=5)
    p.add_argument("--service-min", type=float, default=15.0)
    p.add_argument("--service-max", type=float, default=45.0)
    p.add_argument("--score-lo", type=float, default=60.0)
    p.add_argument("--score-hi", type=float, default=2000.0)
    p.add_argument("--mandatory", type=int, default=15)
    p.add_argument("--tmax", type=float, default=480.0)
    p.add_argument("--square", type=float, default=240.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("derive", help="transform an instance (abc/mandatory/rescore/subsample)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--abc", action="store_true", help="recompute ABC classes")
    p.add_argument("--mandatory", type=int, default=None, help="select top-M as mandatory")
    p.add_argument("--rescore", default=None, help="LO,HI uniform rescore bounds")
    p.add_argument("--subsample", default=None, help="N,M,D small-instance subsample")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("solve", help="run the 2MLS heuristic (best of N runs)")
    p.add_argument("--instance", required=True)
    _add_model_flags(p)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stagnation", type=int, default=300)
    p.add_argument("--time-limit-ms", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("exact", help="run the exact oracle (small instances)")
    p.add_argument("--instance", required=True)
    _add_model_flags(p)
    p.add_argument("--size-limit", type=int, default=12)
    p.add_argument("--lp", default=None, help="also export the LP-format model")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("sensitivity", help="simulated score realization study")
    p.add_argument("--instance", required=True)
    p.add_argument("--solutions", required=True,
                   help="directory with <MODEL>.solution.json files (WS required)")
    p.add_argument("--levels", default=None, help="comma separated coe levels")
    p.add_argument("--per-level", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("report", help="aggregate an artifact tree into CSV/JSON reports")
    p.add_argument("--runs", required=True, help="experiment output directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("experiment", help="run a configured end-to-end pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
