"""Command-line entry point: ``tierbid <command> [options]``.

Commands
    generate        draw a file population and scenario set, write it as JSON
    solve           solve one instance with one method
    sweep           run an experiment plan and write results, summary and plot data
    validate-queue  simulate tiers and compare with the closed-form latency
    oracle          brute-force a tiny instance

``--config`` takes a JSON file. For ``sweep`` it is a full plan; the other
commands read its ``system``, ``generator`` and ``solver`` sections when
present and ignore the rest, so a plan file works everywhere.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import core_model as cm
from .baselines import solve_gh, solve_storage_only
from .core_model import SystemConfig
from .des_validator import check_schedule, load_levels
from .errors import TierbidError
from .harness import (_tuples, load_plan, plan_from_dict, plan_to_dict, preset, preset_names,
                      run_and_report)
from .scenario_gen import GeneratorSpec, generate_instance, load_instance, save_instance
from .solver import SolverOptions, brute_force_oracle, solve_pm, solve_stage_two

METHOD_FLAGS = {"pm": "PM", "is": "IS", "gh1": "GH1", "gh2": "GH2"}


def _read_config(path) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise TierbidError("config must be a JSON object")
    return data


def _sections(data: dict):
    system = SystemConfig(**data.get("system", {}))
    generator = GeneratorSpec(**_tuples(data.get("generator", {})))
    solver = SolverOptions(**_tuples(data.get("solver", {})))
    return system, generator, solver


def _write_table(rows: list[dict], columns, path: Path, fmt: str) -> Path:
    path = path.with_suffix("." + fmt)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        path.write_text(buf.getvalue())
    else:
        path.write_text(json.dumps({"columns": list(columns), "rows": rows}, indent=1) + "\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _instance(args, generator: GeneratorSpec):
    if getattr(args, "instance", None):
        return load_instance(args.instance)
    if args.seed is not None:
        generator = dataclasses.replace(generator, seed=args.seed)
    return generate_instance(generator)


# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    _, generator, _ = _sections(_read_config(args.config))
    if args.num_files is not None:
        generator = dataclasses.replace(generator, num_files=args.num_files)
    if args.num_scenarios is not None:
        generator = dataclasses.replace(generator, num_scenarios=args.num_scenarios)
    inst = _instance(args, generator)
    path = _out_dir(args) / "instance.json"
    save_instance(inst, path)
    print(f"{len(inst.files)} files, {len(inst.scenarios)} scenarios -> {path}")
    return 0


def _solve(method: str, files, scenarios, cfg, opts):
    if method == "PM":
        d1, plan, _ = solve_pm(files, scenarios, cfg, opts)
        return d1, plan
    d1, _ = solve_storage_only(files, scenarios, cfg, opts)
    if method == "IS":
        return d1, [solve_stage_two(d1, sc, files, cfg, opts)[0] for sc in scenarios]
    variant = "per_size" if method == "GH1" else "per_rate"
    return d1, [solve_gh(files, d1, sc, cfg, variant) for sc in scenarios]


def cmd_solve(args) -> int:
    system, generator, solver = _sections(_read_config(args.config))
    inst = _instance(args, generator)
    if args.seed is not None:
        solver = dataclasses.replace(solver, seed=args.seed)
    method = METHOD_FLAGS[args.method]
    t0 = time.perf_counter()
    d1, plan = _solve(method, inst.files, inst.scenarios, system, solver)
    wall = time.perf_counter() - t0
    pr = cm.profit(d1, plan, inst.scenarios, inst.files, system, mode="expected")
    rows = []
    for sc, d2 in zip(inst.scenarios, plan):
        for i, f in enumerate(inst.files):
            rows.append({"scenario": sc.index, "file_id": f.id, "accept": int(d1.accept[i]),
                         "hot_replica": int(d1.hot_replica[i]), "access": int(d2.accept_access[i]),
                         "pi_cold": repr(float(d2.sched_prob[i, cm.COLD])),
                         "pi_hot": repr(float(d2.sched_prob[i, cm.HOT]))})
    out = _out_dir(args)
    path = _write_table(rows, rows[0].keys() if rows else (), out / "solution", args.format)
    summary = {"method": method, "wall_time_s": wall, "total_profit": pr.total,
               "storage_profit": pr.storage_profit, **dataclasses.asdict(pr)}
    (out / "solution_summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    print(f"{method}: expected profit {pr.total:.4f} cents "
          f"(storage {pr.storage_profit:.4f}, access {pr.access_profit:.4f}), "
          f"{int(d1.accept.sum())} files stored, {wall:.1f}s -> {path}")
    return 0


def cmd_sweep(args) -> int:
    if args.preset:
        plan = preset(args.preset)
    elif args.config:
        plan = load_plan(args.config)
    else:
        print(f"sweep needs --config or --preset (one of {', '.join(preset_names())})",
              file=sys.stderr)
        return 2
    changes = {}
    if args.seed is not None:
        changes["seed_base"] = args.seed
    if args.runs is not None:
        changes["runs"] = args.runs
    if args.method:
        changes["methods"] = tuple(METHOD_FLAGS[m] for m in args.method)
    if changes:
        plan = plan_from_dict({**plan_to_dict(plan), **changes})
    log = (lambda m: print(m, file=sys.stderr, flush=True)) if not args.quiet else None
    rows, paths = run_and_report(plan, args.out, fmt=args.format, workers=args.workers, log=log)
    bad = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} rows ({bad} errors) -> {paths['results']}")
    return 0


def cmd_validate_queue(args) -> int:
    data = _read_config(args.config).get("queue", {})
    size = np.asarray(data.get("size_mb", [12.5, 25.0]), dtype=float)
    mix = np.asarray(data.get("mix", [2.0, 1.0]), dtype=float)
    rate = float(data.get("rate_mbps", 2000.0))
    loads = data.get("utilization", args.utilization)
    seed = 0 if args.seed is None else args.seed
    rows = []
    for level, lam in zip(loads, load_levels(loads, size, mix, rate)):
        t0 = time.perf_counter()
        pi = np.zeros((len(size), 2))
        pi[:, 0] = 1.0
        chk = check_schedule(pi, lam, size, [rate, rate], horizon_requests=args.requests,
                             seed=seed)
        wall = time.perf_counter() - t0
        lat_err = float(np.nanmax(chk.latency_rel_error))
        rows.append({"utilization": level, "analytic_wait_s": repr(float(chk.analytic_wait_s[0])),
                     "simulated_wait_s": repr(float(chk.simulated_wait_s[0])),
                     "ci_halfwidth_s": repr(float(chk.ci_halfwidth[0])),
                     "wait_rel_error": repr(float(chk.wait_rel_error[0])),
                     "max_latency_rel_error": repr(lat_err), "wall_time_s": round(wall, 3)})
        print(f"rho={level:.2f}  P-K wait {chk.analytic_wait_s[0]:.6g}s  "
              f"DES {chk.simulated_wait_s[0]:.6g}s +- {chk.ci_halfwidth[0]:.2g}  "
              f"rel.err {chk.wait_rel_error[0]:.3%}  latency rel.err {lat_err:.3%}  {wall:.1f}s")
    if args.out:
        path = _write_table(rows, rows[0].keys(), _out_dir(args) / "queue_check", args.format)
        print(f"-> {path}")
    return 0


def cmd_oracle(args) -> int:
    data = _read_config(args.config)
    system, generator, solver = _sections(data)
    if "generator" not in data:
        generator = GeneratorSpec(num_files=3, num_scenarios=2)
    if "system" not in data:
        system = system.with_(num_slots=1)
    inst = _instance(args, generator)
    t0 = time.perf_counter()
    res = brute_force_oracle(inst.files, inst.scenarios, system, grid_resolution=args.grid)
    print(f"oracle profit {res.profit:.6f} cents, accept {res.stage_one.accept.tolist()}, "
          f"hot {res.stage_one.hot_replica.tolist()}  ({time.perf_counter() - t0:.1f}s)")
    result = {"oracle_profit": res.profit, "accept": res.stage_one.accept.tolist(),
              "hot_replica": res.stage_one.hot_replica.tolist(),
              "access": [d.accept_access.tolist() for d in res.stage_two],
              "sched_prob": [d.sched_prob.tolist() for d in res.stage_two]}
    if args.method:
        method = METHOD_FLAGS[args.method]
        d1, plan = _solve(method, inst.files, inst.scenarios, system, solver)
        got = cm.profit(d1, plan, inst.scenarios, inst.files, system, mode="expected").total
        ratio = got / res.profit if res.profit > 0 else float("nan")
        print(f"{method} profit {got:.6f} cents, ratio to oracle {ratio:.4f}")
        result.update(method=method, method_profit=got, ratio=ratio)
    if args.out:
        path = _out_dir(args) / "oracle.json"
        path.write_text(json.dumps(result, indent=1) + "\n")
        print(f"-> {path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config or plan file")
    common.add_argument("--seed", type=int, help="seed (sweep: overrides the plan's seed_base)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="tierbid", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="draw an instance")
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--num-files", type=int)
    g.add_argument("--num-scenarios", type=int)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", parents=[common], help="solve one instance")
    s.add_argument("--instance", help="instance JSON from `generate`")
    s.add_argument("--method", choices=sorted(METHOD_FLAGS), default="pm")
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", parents=[common], help="run an experiment plan")
    w.add_argument("--preset", help="shipped plan name")
    w.add_argument("--method", choices=sorted(METHOD_FLAGS), action="append",
                   help="restrict to this method (repeatable)")
    w.add_argument("--runs", type=int)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--out", default="results", help="output directory")
    w.add_argument("--quiet", action="store_true")
    w.set_defaults(func=cmd_sweep)

    q = sub.add_parser("validate-queue", parents=[common], help="DES against the closed form")
    q.add_argument("--utilization", type=float, nargs="+", default=[0.3, 0.6, 0.9])
    q.add_argument("--requests", type=int, default=1_000_000)
    q.add_argument("--out", help="output directory")
    q.set_defaults(func=cmd_validate_queue)

    o = sub.add_parser("oracle", parents=[common], help="brute-force a tiny instance")
    o.add_argument("--instance", help="instance JSON from `generate`")
    o.add_argument("--grid", type=int, default=32)
    o.add_argument("--method", choices=sorted(METHOD_FLAGS), help="also solve and compare")
    o.add_argument("--out", help="output directory")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TierbidError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"tierbid {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
