"""End-to-end experiment pipeline: generate -> solve (heuristic and/or exact)
-> sensitivity grid -> report.

Driven by a declarative TOML config (see configs/paper-small.toml and the
README schema). Every artifact embeds the config hash and the seed that
produced it; reruns skip artifacts whose stored hash matches, so a completed
tree is a no-op and a changed config rebuilds exactly what it invalidates.
Per-instance seeds are derived from the master seed and the instance name, so
results do not depend on the number of worker processes.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import instances as ik
from . import report as rp
from .core import Instance, metrics
from .exact import ExactSolver
from .scoring import (ScoreModel, build_mns, build_mws, build_ns, build_sabc,
                      build_wabc, build_wabc_class_means, build_ws)
from .sensitivity import evaluate_under_scenario, scenario_grid
from .solver import SolverConfig, derive_seed, solve_best_of

MODEL_NAMES = ("NS", "MNS", "sABC", "wABC", "WS", "MWS")


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()[:16]


def load_config(path) -> dict:
    text = Path(path).read_bytes()
    if str(path).endswith(".json"):
        return json.loads(text)
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(text.decode())


# ---------------------------------------------------------------------------
# generation presets
# ---------------------------------------------------------------------------

GEN_PRESETS = {
    # large synthetic sets shaped after the industrial benchmarks
    "setn": dict(kind="direct", n=150, days=5, service=(15.0, 45.0),
                 scores=(60.0, 2000.0), m=15, tmax=480.0, square=100.0),
    "setn280": dict(kind="direct", n=280, days=5, service=(15.0, 45.0),
                    scores=(60.0, 2000.0), m=15, tmax=480.0, square=110.0),
    "setb": dict(kind="direct", n=40, days=4, service=(55.0, 65.0),
                 scores=(1.0, 1300.0), m=15, tmax=480.0, square=120.0),
    # small exact-solvable sets: subsampled from a larger synthetic source;
    # the square is sized so the subsample cannot usually serve every customer
    # yet single mandatory customers stay reachable within a working day
    "small10": dict(kind="subsample", source_n=120, n=10, m=2, d=2,
                    service=(15.0, 45.0), scores=(60.0, 2000.0), tmax=480.0, square=240.0),
    "small15": dict(kind="subsample", source_n=120, n=15, m=5, d=3,
                    service=(15.0, 45.0), scores=(60.0, 2000.0), tmax=480.0, square=240.0),
}

RESCORE_VARIANTS = {"low": (1.0, 1000.0), "high": (1.0, 25000.0)}


def generate_preset(preset: str, index: int, master_seed: int,
                    rescore: str = "", name: str = "") -> Instance:
    """One deterministic instance of a named preset."""
    spec = GEN_PRESETS.get(preset)
    if spec is None:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(GEN_PRESETS)}")
    name = name or f"{preset}{'-' + rescore if rescore else ''}-{index:03d}"
    seed = derive_seed(master_seed, f"gen:{name}")
    if spec["kind"] == "direct":
        cfg = ik.GenConfig(
            n_customers=spec["n"], horizon_days=spec["days"],
            service_range=spec["service"], score_mode=("uniform",) + spec["scores"],
            mandatory_count=spec["m"], max_daily_minutes=spec["tmax"],
            square_side=spec["square"], rng_seed=seed, name=name)
        inst = ik.synthesize(cfg)
    else:
        cfg = ik.GenConfig(
            n_customers=spec["source_n"], horizon_days=5,
            service_range=spec["service"], score_mode=("uniform",) + spec["scores"],
            mandatory_count=0, max_daily_minutes=spec["tmax"],
            square_side=spec["square"], rng_seed=seed, name=name)
        source = ik.synthesize(cfg)
        inst = ik.subsample_small(source, spec["n"], spec["m"], spec["d"],
                                  rng_seed=derive_seed(master_seed, f"sub:{name}"),
                                  name_suffix="")
    if rescore:
        lo, hi = RESCORE_VARIANTS[rescore]
        inst = ik.rescore_uniform(inst, lo, hi,
                                  rng_seed=derive_seed(master_seed, f"rescore:{name}"))
    return inst


# ---------------------------------------------------------------------------
# model suite
# ---------------------------------------------------------------------------

def build_model(instance: Instance, name: str, wabc_weights=(15.0, 5.0, 1.0),
                wabc_class_means: bool = False, manual_ids=None, extra_ids=None,
                manual_top: int = 0, extra_top: int = 0, extra_random: int = 0,
                fallback: bool = False) -> ScoreModel:
    """Build one model variant by name.

    MNS manual customers default to the next ``manual_top`` score ranks after
    the instance-mandatory set (manual selection targets the most promising
    customers). MWS extras come either from the score ranking (``extra_top``)
    or, with ``extra_random``, as a per-instance seeded draw of optional
    customers, modeling purchase-intent information that is independent of the
    predicted score.
    """
    key = name.upper()
    if key == "NS":
        return build_ns(instance)
    if key == "SABC":
        return build_sabc(instance)
    if key == "WABC":
        if wabc_class_means:
            return build_wabc_class_means(instance)
        return build_wabc(instance, *wabc_weights)
    if key == "WS":
        return build_ws(instance)
    base = instance.mandatory_ids
    ranked = [cid for cid in ik.rank_by_score(instance) if cid not in base]
    if key == "MNS":
        ids = list(manual_ids) if manual_ids is not None else ranked[:manual_top]
        return build_mns(instance, ids)
    if key == "MWS":
        if extra_ids is not None:
            ids = list(extra_ids)
        elif extra_random:
            import numpy as np
            rng = np.random.default_rng(derive_seed(0, f"intent:{instance.name}"))
            pool = [c.id for c in instance.customers if not c.mandatory]
            take = min(extra_random, len(pool))
            ids = [pool[k] for k in sorted(rng.choice(len(pool), size=take, replace=False))]
        else:
            ids = ranked[:extra_top]
        return build_mws(instance, ids, fallback_on_infeasible=fallback)
    raise ValueError(f"unknown model {name!r}")


def build_model_suite(instance: Instance, names=MODEL_NAMES, **kwargs) -> dict:
    return {name: build_model(instance, name, **kwargs) for name in names}


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _meta_matches(path: Path, chash: str) -> bool:
    if not path.exists():
        return False
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return False
    return doc.get("meta", {}).get("config_hash") == chash


def _solve_one(args):
    """Worker: all models, heuristic and/or exact, for one instance file."""
    inst_path, out_dir, cfg, chash = args
    out_dir = Path(out_dir)
    instance = ik.load_instance(inst_path)
    seed = derive_seed(int(cfg.get("seed", 0)), f"solve:{instance.name}")
    model_opts = cfg.get("model_options", {})
    suite = build_model_suite(
        instance, names=[_canon(m) for m in cfg.get("models", MODEL_NAMES)],
        wabc_weights=tuple(model_opts.get("wabc_weights", (15.0, 5.0, 1.0))),
        wabc_class_means=bool(model_opts.get("wabc_class_means", False)),
        manual_top=int(model_opts.get("manual_top", 0)),
        extra_top=int(model_opts.get("extra_top", 0)),
        extra_random=int(model_opts.get("extra_random", 0)),
        fallback=bool(model_opts.get("fallback", False)))
    solve_cfg = cfg.get("solve", {})
    solver = solve_cfg.get("solver", "both")
    runs = int(solve_cfg.get("runs", 10))
    base = SolverConfig(
        stop_stagnation=int(solve_cfg.get("stagnation", 300)),
        max_wall_ms=solve_cfg.get("time_limit_ms"))

    exact_solver = None
    if solver in ("exact", "both"):
        size_limit = int(solve_cfg.get("size_limit", 12))
        if instance.n_customers <= size_limit:
            exact_solver = ExactSolver(instance, size_limit=size_limit)

    for mname, model in suite.items():
        meta = {"config_hash": chash, "seed": seed, "instance": instance.name,
                "model": mname}
        if solver in ("2mls", "both"):
            run_dir = out_dir / "runs" / instance.name / mname
            run_dir.mkdir(parents=True, exist_ok=True)
            marker = run_dir / "best.solution.json"
            if not _meta_matches(marker, chash):
                best, best_stats, all_stats = solve_best_of(
                    instance, model, runs=runs,
                    rng_seed=derive_seed(seed, mname), config=base)
                for r, st in enumerate(all_stats):
                    ik.dump_json({"meta": meta, **st.to_dict()},
                                 run_dir / f"run_{r:02d}.stats.json")
                if best is not None:
                    ik.save_solution(best, marker, meta=meta)
                else:
                    ik.dump_json({"meta": meta, "status": "infeasible"}, marker)
        if exact_solver is not None:
            oracle_dir = out_dir / "oracle" / instance.name
            oracle_dir.mkdir(parents=True, exist_ok=True)
            marker = oracle_dir / f"{mname}.result.json"
            if not _meta_matches(marker, chash):
                res = exact_solver.solve(model)
                doc = {"meta": meta, "status": res.status, "objective": res.objective,
                       "total_travel": res.total_travel,
                       "enumerated_assignments": res.enumerated_assignments,
                       "fallback_used": res.fallback_used}
                ik.dump_json(doc, marker)
                if res.solution is not None:
                    ik.save_solution(res.solution, oracle_dir / f"{mname}.solution.json",
                                     meta=meta)
    return instance.name


def _canon(name: str) -> str:
    mapping = {m.lower(): m for m in MODEL_NAMES}
    if name.lower() not in mapping:
        raise ValueError(f"unknown model {name!r}")
    return mapping[name.lower()]


def run_experiment(cfg: dict, out_dir, jobs: int = 1, log=print) -> dict:
    """Execute the configured pipeline; returns a summary dict with failures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    if not cfg.get("models"):
        raise ValueError("experiment config needs a non-empty model list")
    failures = {}

    # 1. instances
    inst_dir = out_dir / "instances"
    inst_dir.mkdir(exist_ok=True)
    inst_paths = []
    gen = cfg.get("gen", {})
    if "files" in gen:
        for f in gen["files"]:
            inst_paths.append(Path(f))
    else:
        preset = gen.get("preset", "small10")
        count = int(gen.get("count", 10))
        rescore = gen.get("rescore", "")
        for i in range(count):
            name = f"{preset}{'-' + rescore if rescore else ''}-{i:03d}"
            path = inst_dir / f"{name}.json"
            if not _meta_matches(path, chash):
                inst = generate_preset(preset, i, int(cfg.get("seed", 0)), rescore=rescore)
                ik.save_instance(inst, path, meta={"config_hash": chash,
                                                   "seed": cfg.get("seed", 0)})
            inst_paths.append(path)
    log(f"[experiment] {len(inst_paths)} instances ready")

    # 2. solve
    tasks = [(str(p), str(out_dir), cfg, chash) for p in inst_paths]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_solve_one, task): task for task in tasks}
            for future, task in futures.items():
                try:
                    future.result()
                except Exception as exc:  # isolate failing instances
                    failures[Path(task[0]).stem] = f"{type(exc).__name__}: {exc}"
    else:
        for task in tasks:
            try:
                _solve_one(task)
            except Exception as exc:  # isolate failing instances
                failures[Path(task[0]).stem] = f"{type(exc).__name__}: {exc}"
    log(f"[experiment] solving done ({len(failures)} failures)")

    # 3. report rows
    rows = collect_rows(out_dir, inst_paths)
    report_dir = out_dir / "report"
    report_dir.mkdir(exist_ok=True)
    rp.write_rows_csv(rows, report_dir / "raw.csv")
    selected = [r for r in rows if r.run_id in rp.SELECTED_RUN_IDS]
    rp.compute_rns_rws(selected)
    kept = rp.filter_instances(selected)
    if kept:
        records = rp.aggregate(kept, group_by=("run_id", "model"))
        rp.write_summary(records, report_dir / "summary.csv", report_dir / "summary.json")

    # 4. sensitivity
    sens_cfg = cfg.get("sensitivity", {})
    if sens_cfg.get("enabled", False):
        _sensitivity_csv(cfg, out_dir, inst_paths, sens_cfg, log)

    if failures:
        ik.dump_json(failures, out_dir / "failures.json")
        log(f"[experiment] FAILURES: {failures}")
    return {"instances": len(inst_paths), "failures": failures, "rows": len(rows)}


def collect_rows(out_dir, inst_paths) -> list:
    """Build report rows from the artifact tree (best 2MLS, per-run, oracle).
    Unreadable instances are skipped; their failure is already recorded by the
    solve step."""
    out_dir = Path(out_dir)
    rows = []
    for path in inst_paths:
        try:
            instance = ik.load_instance(path)
        except (OSError, ValueError, KeyError):
            continue
        name = instance.name
        for kind, base in (("runs", out_dir / "runs" / name),
                           ("oracle", out_dir / "oracle" / name)):
            if not base.exists():
                continue
            if kind == "runs":
                for model_dir in sorted(base.iterdir()):
                    rows.extend(_rows_from_run_dir(instance, model_dir))
            else:
                for res_path in sorted(base.glob("*.result.json")):
                    rows.append(_row_from_oracle(instance, res_path))
    return rows


def _rows_from_run_dir(instance, model_dir: Path) -> list:
    rows = []
    model = model_dir.name
    for stats_path in sorted(model_dir.glob("run_*.stats.json")):
        st = json.loads(stats_path.read_text())
        rows.append(rp.ReportRow(
            instance=instance.name, model=model,
            run_id=stats_path.stem.split(".")[0].replace("run_", ""),
            total_travel=st.get("total_travel"), wall_ms=st.get("wall_ms"),
            objective=st.get("objective"), status=st.get("status", "ok")))
    best_path = model_dir / "best.solution.json"
    if best_path.exists():
        doc = json.loads(best_path.read_text())
        if doc.get("status") == "infeasible":
            rows.append(rp.ReportRow(instance=instance.name, model=model,
                                     run_id="best", status="infeasible"))
        else:
            sol = ik.solution_from_dict(doc)
            m = metrics(sol, instance)
            wall = sum(r.wall_ms or 0.0 for r in rows if r.run_id != "best")
            rows.append(rp.ReportRow(
                instance=instance.name, model=model, run_id="best",
                share_visited=m["share_visited"], share_realized=m["share_realized"],
                total_travel=m["total_travel"], wall_ms=wall,
                objective=max((r.objective or 0.0) for r in rows) if rows else None))
    return rows


def _row_from_oracle(instance, res_path: Path) -> rp.ReportRow:
    doc = json.loads(res_path.read_text())
    model = res_path.name.replace(".result.json", "")
    if doc.get("status") != "Optimal":
        return rp.ReportRow(instance=instance.name, model=model, run_id="oracle",
                            status="infeasible" if doc.get("status") == "Infeasible"
                            else doc.get("status", "error").lower())
    sol = ik.load_solution(res_path.with_name(f"{model}.solution.json"))
    m = metrics(sol, instance)
    return rp.ReportRow(
        instance=instance.name, model=model, run_id="oracle",
        share_visited=m["share_visited"], share_realized=m["share_realized"],
        total_travel=m["total_travel"], objective=doc.get("objective"))


def _sensitivity_csv(cfg, out_dir: Path, inst_paths, sens_cfg, log):
    import csv
    rows = []
    levels = sens_cfg.get("levels")
    per_level = int(sens_cfg.get("per_level", 10))
    for path in inst_paths:
        try:
            instance = ik.load_instance(path)
        except (OSError, ValueError, KeyError):
            continue
        solutions = {}
        for model in [_canon(m) for m in cfg.get("models", MODEL_NAMES)]:
            sol_path = out_dir / "oracle" / instance.name / f"{model}.solution.json"
            if not sol_path.exists():
                sol_path = out_dir / "runs" / instance.name / model / "best.solution.json"
            if sol_path.exists():
                doc = json.loads(sol_path.read_text())
                if "tours" in doc:
                    solutions[model] = ik.solution_from_dict(doc)
        if "WS" not in solutions:
            continue
        seed = derive_seed(int(cfg.get("seed", 0)), f"sens:{instance.name}")
        for scen in scenario_grid(instance, coe_levels=levels,
                                  scenarios_per_level=per_level, rng_seed=seed):
            result = evaluate_under_scenario(solutions, scen, instance)
            for model in sorted(result):
                rows.append([instance.name, model, scen.coe, scen.scenario_index,
                             result[model]["realized_sim"], result[model]["rws_sim"]])
    with open(out_dir / "sensitivity.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "model", "coe", "scenario", "realized_sim", "rws_sim"])
        for row in rows:
            writer.writerow(["" if v is None else (format(v, ".12g")
                             if isinstance(v, float) else v) for v in row])
    log(f"[experiment] sensitivity rows: {len(rows)}")
