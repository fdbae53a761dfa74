"""Sweep experiments: plans, per-run simulation, and report files.

A plan fixes a base system, a generator, one swept parameter and its grid.
Every (point, run) job draws its own instance from ``seed_base + run`` (so all
grid points see the same populations), solves stage one per method, realizes
``T`` slots and solves stage two for each realized scenario. Jobs are
independent; rows are written in job order, so output bytes depend only on
the plan.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import core_model as cm
from .baselines import solve_gh, solve_storage_only
from .core_model import StageOneDecision, SystemConfig
from .errors import TierbidError, InvalidInputError
from .scenario_gen import GeneratorSpec, generate_instance, realize_slots
from .solver import SolverOptions, solve_pm, solve_stage_two

PLAN_SCHEMA_VERSION = 1
METHODS = ("PM", "IS", "GH1", "GH2")
# sweep name -> (SystemConfig field, conversion from the grid's unit)
SWEEP_VARIABLES = {
    "cold_capacity": ("cold_capacity_mb", cm.gb_to_mb, "GB"),
    "hot_capacity": ("hot_capacity_mb", cm.gb_to_mb, "GB"),
    "cold_rate": ("cold_rate_mbps", cm.gbps_to_mbps, "Gb/s"),
    "hot_rate": ("hot_rate_mbps", cm.gbps_to_mbps, "Gb/s"),
    "cold_cost": ("cold_cost_cents_per_mb", cm.per_gb_to_per_mb, "cents/GB"),
    "hot_cost": ("hot_cost_cents_per_mb", cm.per_gb_to_per_mb, "cents/GB"),
}
CSV_COLUMNS = (
    "sweep", "point", "value", "method", "run", "seed", "status",
    "total_profit", "storage_profit", "access_profit", "storage_revenue", "storage_cost",
    "arar", "stored_files", "hot_replicas", "accepted_access", "submitted_access",
    "expected_profit", "repairs", "best_start",
)
SUMMARY_METRICS = ("total_profit", "storage_profit", "access_profit", "arar",
                   "stored_files", "hot_replicas", "accepted_access")


@dataclass(frozen=True)
class ExperimentPlan:
    sweep: str
    grid: tuple
    system: SystemConfig = field(default_factory=SystemConfig)
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    methods: tuple = METHODS
    runs: int = 10
    seed_base: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)
    stage_two_multistarts: int = 1
    name: str = ""

    def __post_init__(self):
        if self.sweep not in SWEEP_VARIABLES:
            raise InvalidInputError(f"unknown sweep variable {self.sweep!r}")
        grid = tuple(float(v) for v in self.grid)
        if not grid or any(b < a for a, b in zip(grid, grid[1:])):
            raise InvalidInputError("grid must be nonempty and sorted")
        object.__setattr__(self, "grid", grid)
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise InvalidInputError(f"methods must be a nonempty subset of {METHODS}")
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.runs < 1:
            raise InvalidInputError("runs must be >= 1")

    def config_at(self, value: float) -> SystemConfig:
        name, convert, _ = SWEEP_VARIABLES[self.sweep]
        return self.system.with_(**{name: convert(value)})

    def stage_two_options(self) -> SolverOptions:
        return dataclasses.replace(self.solver, multistarts=self.stage_two_multistarts)


def plan_to_dict(plan: ExperimentPlan) -> dict:
    return {
        "schema_version": PLAN_SCHEMA_VERSION,
        "name": plan.name,
        "sweep": plan.sweep,
        "grid": list(plan.grid),
        "methods": list(plan.methods),
        "runs": plan.runs,
        "seed_base": plan.seed_base,
        "stage_two_multistarts": plan.stage_two_multistarts,
        "system": dataclasses.asdict(plan.system),
        "generator": dataclasses.asdict(plan.generator),
        "solver": dataclasses.asdict(plan.solver),
    }


def _tuples(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def plan_from_dict(data: dict) -> ExperimentPlan:
    version = data.get("schema_version")
    if version != PLAN_SCHEMA_VERSION:
        raise InvalidInputError(f"unsupported plan schema version {version!r}")
    known = {"schema_version", "name", "sweep", "grid", "methods", "runs", "seed_base",
             "stage_two_multistarts", "system", "generator", "solver"}
    extra = set(data) - known
    if extra:
        raise InvalidInputError(f"unknown plan keys: {sorted(extra)}")
    try:
        return ExperimentPlan(
            sweep=data["sweep"], grid=tuple(data["grid"]),
            system=SystemConfig(**data.get("system", {})),
            generator=GeneratorSpec(**_tuples(data.get("generator", {}))),
            methods=tuple(data.get("methods", METHODS)),
            runs=int(data.get("runs", 10)), seed_base=int(data.get("seed_base", 0)),
            solver=SolverOptions(**_tuples(data.get("solver", {}))),
            stage_two_multistarts=int(data.get("stage_two_multistarts", 1)),
            name=str(data.get("name", "")))
    except TypeError as exc:
        raise InvalidInputError(f"bad plan field: {exc}") from None


def load_plan(path) -> ExperimentPlan:
    return plan_from_dict(json.loads(Path(path).read_text()))


def save_plan(plan: ExperimentPlan, path) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan), indent=2) + "\n")


def preset_names() -> list[str]:
    files = resources.files("tierbid").joinpath("presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".json"))


def preset(name: str) -> ExperimentPlan:
    """Shipped plan by name, e.g. ``desk_cold_capacity``."""
    res = resources.files("tierbid").joinpath("presets").joinpath(f"{name}.json")
    if not res.is_file():
        raise InvalidInputError(f"no preset {name!r}; available: {preset_names()}")
    return plan_from_dict(json.loads(res.read_text()))


# ---------------------------------------------------------------------------
# one run


def arar_counts(d1: StageOneDecision, d2s, slots, scenarios) -> tuple[int, int]:
    """Accepted and submitted access bids over the realized slots.

    A bid is submitted by a stored file that sees requests in that slot.
    """
    accepted = submitted = 0
    for k, d2 in zip(slots, d2s):
        asks = (d1.accept == 1) & (scenarios[k].arrival_rate_per_s > 0)
        submitted += int(asks.sum())
        accepted += int((asks & (d2.accept_access == 1)).sum())
    return accepted, submitted


def arar(accepted: int, submitted: int) -> float:
    return accepted / submitted if submitted else 0.0


def _slot_decisions(slots, solve_one) -> list:
    cache = {}
    out = []
    for k in slots:
        k = int(k)
        if k not in cache:
            cache[k] = solve_one(k)
        out.append(cache[k])
    return out


def _row(plan, point, value, method, run, seed, status="ok", **metrics) -> dict:
    row = {c: "" for c in CSV_COLUMNS}
    row.update(sweep=plan.sweep, point=point, value=value, method=method, run=run, seed=seed,
               status=status)
    row.update(metrics)
    return row


def simulate_run(plan: ExperimentPlan, point: int, run: int) -> list[dict]:
    """All methods of one (grid point, run) job; one row per method."""
    value = plan.grid[point]
    seed = plan.seed_base + run
    cfg = plan.config_at(value)
    inst = generate_instance(dataclasses.replace(plan.generator, seed=seed))
    files, scenarios = inst.files, inst.scenarios
    slots = realize_slots(scenarios, cfg.num_slots, seed=seed)
    opts1 = dataclasses.replace(plan.solver, seed=seed)
    opts2 = dataclasses.replace(plan.stage_two_options(), seed=seed)
    rows = []
    d0 = None
    try:
        d0, _ = solve_storage_only(files, scenarios, cfg, opts1)
    except TierbidError as exc:
        d0_error = f"storage-only stage failed: {exc}"
    for method in plan.methods:
        try:
            expected, repairs, best_start = float("nan"), 0, ""
            if method == "PM":
                d1, plan1, rep = solve_pm(files, scenarios, cfg, opts1, storage_decision=d0)
                expected, repairs, best_start = rep.objective, rep.repairs, rep.best_start
                if rep.plan_polished:
                    # each plan entry already is the stage-two solve for that scenario
                    d2s = [plan1[int(k)] for k in slots]
                else:
                    d2s = _slot_decisions(slots, lambda k: solve_stage_two(
                        d1, scenarios[k], files, cfg, opts2, warm=plan1[k])[0])
            elif d0 is None:
                raise TierbidError(d0_error)
            elif method == "IS":
                d1 = d0
                d2s = _slot_decisions(slots, lambda k: solve_stage_two(
                    d1, scenarios[k], files, cfg, opts2)[0])
            else:
                d1 = d0
                variant = "per_size" if method == "GH1" else "per_rate"
                d2s = _slot_decisions(slots, lambda k: solve_gh(files, d1, scenarios[k], cfg,
                                                                variant))
            pr = cm.profit(d1, d2s, scenarios, files, cfg, mode="realized", slots=slots)
            acc, sub = arar_counts(d1, d2s, slots, scenarios)
            rows.append(_row(plan, point, value, method, run, seed,
                             total_profit=pr.total, storage_profit=pr.storage_profit,
                             access_profit=pr.access_profit,
                             storage_revenue=pr.storage_revenue, storage_cost=pr.storage_cost,
                             arar=arar(acc, sub), stored_files=int(d1.accept.sum()),
                             hot_replicas=int(d1.hot_replica.sum()), accepted_access=acc,
                             submitted_access=sub, expected_profit=expected, repairs=repairs,
                             best_start=best_start))
        except TierbidError as exc:
            rows.append(_row(plan, point, value, method, run, seed,
                             status=f"error: {type(exc).__name__}: {exc}"))
    return rows


def _job(args):
    plan, point, run = args
    return simulate_run(plan, point, run)


def run_experiment(plan: ExperimentPlan, workers: int = 1,
                   on_rows: Callable[[list], None] | None = None) -> list[dict]:
    """Run every (point, run) job; rows come back in job order.

    ``on_rows`` is called with each job's rows as soon as they arrive (in
    order), which is how the CLI writes results incrementally.
    """
    jobs = [(plan, p, r) for p in range(len(plan.grid)) for r in range(plan.runs)]
    rows = []
    if workers > 1:
        import multiprocessing as mp
        with mp.get_context("spawn").Pool(workers) as pool:
            for out in pool.imap(_job, jobs):
                rows.extend(out)
                if on_rows:
                    on_rows(out)
    else:
        for job in jobs:
            out = _job(job)
            rows.extend(out)
            if on_rows:
                on_rows(out)
    return rows


# ---------------------------------------------------------------------------
# reports


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    """Rows of a results CSV with numeric fields parsed back; empty cells become None."""
    text = {"sweep", "method", "status"}
    ints = {"point", "run", "seed", "stored_files", "hot_replicas", "accepted_access",
            "submitted_access", "repairs", "best_start"}
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out.append({k: v if k in text else None if v == "" else int(v) if k in ints
                        else float(v) for k, v in r.items()})
    return out


def summarize(rows: Sequence[dict]) -> list[dict]:
    """Mean and population std of each metric per (point, method), over ok runs."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["point"], r["method"]), []).append(r)
    out = []
    for (point, method), rs in sorted(groups.items(), key=lambda kv: (kv[0][0],
                                                                    METHODS.index(kv[0][1]))):
        ok = [r for r in rs if r["status"] == "ok"]
        entry = {"point": point, "value": rs[0]["value"], "method": method,
                 "runs": len(rs), "failed_runs": len(rs) - len(ok)}
        for m in SUMMARY_METRICS:
            vals = np.array([float(r[m]) for r in ok])
            entry[f"{m}_mean"] = float(vals.mean()) if vals.size else float("nan")
            entry[f"{m}_std"] = float(vals.std()) if vals.size else float("nan")
        out.append(entry)
    return out


def _series(summary, method, metric):
    pts = [s for s in summary if s["method"] == method]
    return [s["value"] for s in pts], [s[f"{metric}_mean"] for s in pts]


def plot_tables(summary: Sequence[dict], methods: Sequence[str]) -> dict:
    """The four panels: profit, PM profit split, ARAR, PM acceptance counts.

    Each panel is a wide table: the swept value, then one column per series.
    """
    methods = [m for m in METHODS if m in methods]
    x = sorted({s["value"] for s in summary})

    def table(series):
        cols = {name: dict(zip(*_series(summary, m, metric))) for name, m, metric in series}
        return ["value"] + list(cols), [[v] + [cols[c].get(v, float("nan")) for c in cols]
                                         for v in x]

    focus = "PM" if "PM" in methods else methods[0]
    return {
        "profit": table([(m, m, "total_profit") for m in methods]),
        "profit_split": table([(f"{focus}_storage", focus, "storage_profit"),
                               (f"{focus}_access", focus, "access_profit")]),
        "arar": table([(m, m, "arar") for m in methods]),
        "acceptance": table([(f"{focus}_stored_files", focus, "stored_files"),
                             (f"{focus}_accepted_access", focus, "accepted_access")]),
    }


def emit_report(rows: Sequence[dict], out_dir, plan: ExperimentPlan, fmt: str = "csv",
                wall_time: float | None = None) -> dict:
    """Write results, summary and plot data; returns the written paths by role."""
    if not rows:
        raise InvalidInputError("no results to report")
    if fmt not in ("csv", "json"):
        raise InvalidInputError(f"unknown format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    if fmt == "csv":
        paths["results"] = out / "results.csv"
        paths["results"].write_text(rows_to_csv(rows))
    else:
        paths["results"] = out / "results.json"
        paths["results"].write_text(json.dumps({"columns": list(CSV_COLUMNS),
                                                "rows": list(rows)}, indent=1) + "\n")
    summary = summarize(rows)
    meta = {"created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "wall_time_s": wall_time, "plan": plan_to_dict(plan)}
    paths["summary"] = out / "summary.json"
    paths["summary"].write_text(json.dumps({"metadata": meta, "summary": summary}, indent=1)
                                + "\n")
    for name, (header, body) in plot_tables(summary, plan.methods).items():
        p = out / f"plot_{name}.csv"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows([[_fmt(v) for v in line] for line in body])
        p.write_text(buf.getvalue())
        paths[f"plot_{name}"] = p
    return paths


def run_and_report(plan: ExperimentPlan, out_dir, fmt: str = "csv", workers: int = 1,
                   log: Callable[[str], None] | None = None) -> tuple[list, dict]:
    """Run a plan, appending CSV rows to ``partial.csv`` as jobs finish, then report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / "partial.csv"
    partial.write_text(",".join(CSV_COLUMNS) + "\n")
    t0 = time.perf_counter()
    done = [0]
    total = len(plan.grid) * plan.runs

    def on_rows(rs):
        with open(partial, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerows([[_fmt(r[c]) for c in CSV_COLUMNS] for r in rs])
        done[0] += 1
        if log:
            log(f"[{done[0]}/{total}] point {rs[0]['point']} run {rs[0]['run']} "
                f"({time.perf_counter() - t0:.0f}s)")

    rows = run_experiment(plan, workers=workers, on_rows=on_rows)
    paths = emit_report(rows, out, plan, fmt, wall_time=time.perf_counter() - t0)
    partial.unlink()
    return rows, paths
