"""Local solver for the penalised first- and second-stage problems.

Each start runs a continuation: the plain continuous relaxation under an
augmented Lagrangian first, then increasingly steep integrality penalties, and
finally the configured ``(alpha, C)``. Binary variables are rounded to the
nearest integer with 0.5 going to 0; the relaxed solve works on capacities and
rates shrunk by ``1 - eps`` so rounding keeps the original constraints. The
returned integral decision is always checked against the original
constraints. When rounding alone breaks a capacity, the offending files are
dropped, fixed at zero and the relaxation is solved again (a short dive).
Every rounded decision is then completed greedily with files and access bids
that still fit, and the best candidates are re-scored by solving stage two in
full for each scenario.

``solve_pm`` is the complete proposed method: the stage-one solve seeded with
the storage-only decision as an incumbent.
"""
from __future__ import annotations

import dataclasses
import itertools
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import core_model as cm
from ._relaxed import ModelData, RelaxedModel, spg
from .core_model import (FileSpec, Scenario, StageOneDecision, StageTwoDecision, SystemConfig,
                         check_stage_one_feasible, check_stage_two_feasible, sizes_mb,
                         storage_bids, validate_scenarios)
from .errors import InfeasibleInstanceError, InstanceTooLargeError, InvalidInputError
from .relaxation import PenaltyParams, g1, relaxed_objective


@dataclass(frozen=True)
class SolverOptions:
    multistarts: int = 16
    max_iters: int = 300
    final_iters: int = 25
    max_dives: int = 3
    # re-score the best start and incumbents with the full second-stage solve
    polish: bool = True
    tol: float = 1e-6
    seed: int = 0
    constraint_penalty_schedule: tuple = (10.0, 100.0, 1000.0)
    # continuation stages before the configured alpha; weights are relative to the objective scale
    alpha_schedule: tuple = (10.0, 100.0, 1000.0)
    penalty_weight_schedule: tuple = (0.2, 1.0, 5.0)
    barrier_fraction: float = 0.98
    armijo: float = 1e-4
    memory: int = 10

    def __post_init__(self):
        if self.multistarts < 1:
            raise InvalidInputError("multistarts must be >= 1")
        if len(self.alpha_schedule) != len(self.penalty_weight_schedule):
            raise InvalidInputError("alpha and penalty-weight schedules must align")
        for sched in (self.alpha_schedule, self.constraint_penalty_schedule,
                      self.penalty_weight_schedule):
            if any(b <= a for a, b in zip(sched, sched[1:])):
                raise InvalidInputError("schedules must be strictly increasing")


@dataclass
class SolveReport:
    objective: float
    relaxed_objective: float
    iterations: int
    starts: int
    best_start: int
    kkt_residual: float
    slacks: dict = field(default_factory=dict)
    wall_time: float = 0.0
    repairs: int = 0
    rounding_feasible: bool = True
    integrality: tuple = ()
    start_objectives: tuple = ()
    # True when each plan entry is already the full second-stage solve for its scenario
    plan_polished: bool = False


def round_half_down(x) -> np.ndarray:
    """Nearest integer in {0, 1}; exactly 0.5 goes to 0."""
    return (np.asarray(x) > 0.5).astype(np.int64)


def _near_integral(v, tol=1e-3) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.minimum(np.abs(v), np.abs(1 - v)) <= tol


def _continuation(model: RelaxedModel, x, lb, ub, opts: SolverOptions, pen: PenaltyParams,
                  relax_first: bool = False):
    """Run the penalty continuation; returns the final point, iterations, residual, integrality.

    The first alpha stage carries the whole constraint-penalty schedule, later
    stages warm-start from it with one multiplier update each.
    """
    iters = 0
    spg_kw = dict(tol=opts.tol, memory=opts.memory, armijo=opts.armijo)
    integrality = []
    stages = list(zip(opts.alpha_schedule, opts.penalty_weight_schedule))
    if relax_first:
        stages.insert(0, (opts.alpha_schedule[0], 0.0))
    for n_stage, (alpha, weight) in enumerate(stages):
        model.alpha = alpha
        model.pen_weight = min(pen.weight, weight * model.scale)
        model.pen_shape = model.coef_shape
        rhos = opts.constraint_penalty_schedule if n_stage == 0 else (model.rho,)
        for rho in rhos:
            model.rho = rho
            res = spg(model.merit, x, lb, ub, max_iters=opts.max_iters, **spg_kw)
            x, iters = res.x, iters + res.iterations
            model.update_multipliers(x)
        integrality.append(_integral_fraction(model, x))
    model.alpha, model.pen_weight, model.pen_shape = pen.alpha, pen.weight, None
    res = spg(model.merit, x, lb, ub, max_iters=opts.final_iters, **spg_kw)
    x, iters = res.x, iters + res.iterations
    integrality.append(_integral_fraction(model, x))
    return x, iters, res.pg_norm, tuple(integrality)


def _integral_fraction(model: RelaxedModel, x) -> float:
    A, R, H, _, _ = model.derived(x)
    v = np.concatenate([A, R, H.ravel()])
    return float(np.mean(_near_integral(v))) if v.size else 1.0


# ---------------------------------------------------------------------------
# scheduling fit and repair


# hot shares tried when an access bid is placed, hot first with spill to cold
COMPLETION_SHARES = (1.0, 0.75, 0.5, 0.25, 0.0)


def _load_priority(sc: Scenario, files: Sequence[FileSpec]) -> np.ndarray:
    """Bid per unit of offered load; files without traffic come first."""
    load = sc.arrival_rate_per_s * sizes_mb(files)
    q = sc.access_bid_cents
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(load > 0, q / np.where(load > 0, load, 1.0), np.inf)


def _place(i, H, pi, d1: StageOneDecision, sc: Scenario, files, cfg, shares) -> bool:
    """Accept file ``i`` with the first share keeping the scenario feasible; undo otherwise."""
    H[i] = 1
    for share in shares:
        pi[i, cm.HOT], pi[i, cm.COLD] = share, 1.0 - share
        if check_stage_two_feasible(StageTwoDecision(H, pi), d1, sc, files, cfg).feasible:
            return True
    H[i] = 0
    pi[i] = 0.0
    return False


def _shares(i, d1: StageOneDecision, hot_share=None) -> tuple:
    if not d1.hot_replica[i]:
        return (0.0,)
    if hot_share is None:
        return COMPLETION_SHARES
    first = float(np.clip(hot_share[i], 0.0, 1.0))
    return (first,) + tuple(x for x in COMPLETION_SHARES if x != first)


def complete_stage_two(d2: StageTwoDecision, d1: StageOneDecision, sc: Scenario,
                       files: Sequence[FileSpec], cfg: SystemConfig) -> StageTwoDecision:
    """Add rejected access bids of stored files, best bid per unit of offered load first.

    A bid is kept only with a schedule share that leaves the whole scenario
    feasible; existing schedules are not touched.
    """
    H, pi = d2.accept_access.copy(), d2.sched_prob.copy()
    key = _load_priority(sc, files)
    q = sc.access_bid_cents
    for i in np.lexsort((np.arange(len(files)), -key)):
        if not H[i] and d1.accept[i] and q[i] > 0:
            _place(i, H, pi, d1, sc, files, cfg, _shares(i, d1))
    return StageTwoDecision(H, pi)


def settle_stage_two(H, d1: StageOneDecision, sc: Scenario, files: Sequence[FileSpec],
                     cfg: SystemConfig, opts: SolverOptions | None = None,
                     hot_share=None) -> tuple[StageTwoDecision, int]:
    """Integral second-stage decision from a rounded acceptance vector.

    The rounded set with the relaxed hot shares is used as is when feasible.
    Otherwise its files are placed one at a time, best bid per unit of load
    first, trying the relaxed share before the fixed grid; files that fit
    nowhere are dropped. Remaining stored files are then offered the same way.
    Returns the decision and the number of rounded acceptances dropped.
    """
    n = len(files)
    H = np.asarray(H, dtype=np.int64) * d1.accept
    share = np.zeros(n) if hot_share is None else np.clip(np.asarray(hot_share, float), 0, 1)
    pi = np.zeros((n, 2))
    pi[:, cm.HOT] = H * d1.hot_replica * share
    pi[:, cm.COLD] = H - pi[:, cm.HOT]
    d2 = StageTwoDecision(H, pi)
    drops = 0
    if not check_stage_two_feasible(d2, d1, sc, files, cfg).feasible:
        key = _load_priority(sc, files)
        H2, pi2 = np.zeros(n, dtype=np.int64), np.zeros((n, 2))
        for i in np.lexsort((np.arange(n), -key)):
            if H[i] and not _place(i, H2, pi2, d1, sc, files, cfg, _shares(i, d1, share)):
                drops += 1
        d2 = StageTwoDecision(H2, pi2)
    return complete_stage_two(d2, d1, sc, files, cfg), drops


def repair_stage_one(d1: StageOneDecision, files: Sequence[FileSpec], cfg: SystemConfig,
                     value=None) -> tuple[StageOneDecision, int]:
    """Reject stored files, least value per MB first, until both capacities hold."""
    size = sizes_mb(files)
    if value is None:
        value = storage_bids(files) - 2 * cfg.cold_cost_cents_per_mb * size
    A, R = d1.accept.copy(), d1.hot_replica.copy()
    drops = 0
    while not check_stage_one_feasible(StageOneDecision(A, R), files, cfg).feasible:
        acc = np.flatnonzero(A)
        dens = value[acc] / size[acc]
        cold, hot = cm.storage_usage(StageOneDecision(A, R), files)
        if hot > cfg.hot_capacity_mb and cold <= cfg.cold_capacity_mb:
            acc = acc[R[acc] == 1]
            dens = value[acc] / size[acc]
        i = acc[np.lexsort((acc, dens))][0]
        A[i] = R[i] = 0
        drops += 1
    return StageOneDecision(A, R), drops


def _try_access(i, pi, d1: StageOneDecision, sc: Scenario, files, cfg, tiers):
    """Schedule file ``i`` on the first tier in ``tiers`` that keeps the scenario feasible."""
    H = (pi.sum(axis=1) > 0).astype(np.int64)
    H[i] = 1
    for tier in tiers:
        trial = pi.copy()
        trial[i] = 0.0
        trial[i, tier] = 1.0
        d2 = StageTwoDecision(H, trial)
        if check_stage_two_feasible(d2, d1, sc, files, cfg).feasible:
            return d2
    return None


def complete_stage_one(d1: StageOneDecision, plan, files: Sequence[FileSpec],
                       scenarios: Sequence[Scenario], cfg: SystemConfig,
                       storage_only: bool = False):
    """Greedily add rejected files while capacity allows and expected profit rises.

    Each candidate is tried cold-only and with a hot replica; its access in a
    scenario is accepted only if a whole-file schedule on one tier keeps that
    scenario feasible. Returns ``(d1, plan, added)``.
    """
    size = sizes_mb(files)
    storage = storage_bids(files) - 2 * cfg.cold_cost_cents_per_mb * size
    hot_delta = (cfg.cold_cost_cents_per_mb - cfg.hot_cost_cents_per_mb) * size
    p = np.array([sc.probability for sc in scenarios])
    q = np.array([sc.access_bid_cents for sc in scenarios]).reshape(len(scenarios), len(files))
    potential = storage + (0.0 if storage_only else cfg.num_slots * (p @ q))
    A, R = d1.accept.copy(), d1.hot_replica.copy()
    plan = list(plan)
    added = 0
    order = np.lexsort((np.arange(len(files)), -potential / size))
    for i in order:
        if A[i] or potential[i] <= 0:
            continue
        cold, hot = cm.storage_usage(StageOneDecision(A, R), files)
        best = None
        for rep in (0, 1):
            need_cold, need_hot = (2 - rep) * size[i], rep * size[i]
            if hot + need_hot > cfg.hot_capacity_mb:
                continue
            A2, R2 = A.copy(), R.copy()
            A2[i], R2[i] = 1, rep
            gain = storage[i] + rep * hot_delta[i]
            # free cold space by giving accepted cold-only files a hot replica
            spare_hot = cfg.hot_capacity_mb - hot - need_hot
            movable = np.flatnonzero((A == 1) & (R == 0))
            for j in movable[np.lexsort((movable, -size[movable]))]:
                if cold + need_cold <= cfg.cold_capacity_mb:
                    break
                if size[j] <= spare_hot:
                    R2[j] = 1
                    spare_hot -= size[j]
                    cold -= size[j]
                    gain += hot_delta[j]
            cold, hot = cm.storage_usage(StageOneDecision(A, R), files)
            cand = StageOneDecision(A2, R2)
            if not check_stage_one_feasible(cand, files, cfg).feasible:
                continue
            new_plan = []
            if not storage_only:
                tiers = (cm.HOT, cm.COLD) if rep else (cm.COLD,)
                for kk, (sc, d2) in enumerate(zip(scenarios, plan)):
                    trial = None
                    if sc.access_bid_cents[i] > 0:
                        trial = _try_access(i, d2.sched_prob, cand, sc, files, cfg, tiers)
                    if trial is None:
                        new_plan.append(d2)
                    else:
                        new_plan.append(trial)
                        gain += cfg.num_slots * sc.probability * sc.access_bid_cents[i]
            if gain > 1e-12 and (best is None or gain > best[0]):
                best = (gain, A2, R2, new_plan)
        if best is not None:
            _, A, R, new_plan = best
            if not storage_only:
                plan = new_plan
            added += 1
    return StageOneDecision(A, R), plan, added


# ---------------------------------------------------------------------------
# stage one


def _stage_one_data(files, scenarios, cfg: SystemConfig, opts, storage_only):
    size = sizes_mb(files)
    rcfg = cfg.restricted()
    if storage_only:
        weight = np.zeros((0, len(files)))
        arrival = np.zeros((0, len(files)))
        lat = np.ones((0, len(files)))
    else:
        p = np.array([sc.probability for sc in scenarios])
        q = np.array([sc.access_bid_cents for sc in scenarios])
        weight = cfg.num_slots * p[:, None] * q
        arrival = np.array([sc.arrival_rate_per_s for sc in scenarios])
        lat = np.array([sc.latency_req_s for sc in scenarios])
    return ModelData(size_mb=size, storage_bid=storage_bids(files), access_weight=weight,
                     arrival=arrival, latency_s=lat, capacities=rcfg.capacities,
                     rates=rcfg.rates, stability_margin=cfg.stability_margin,
                     cold_cost=cfg.cold_cost_cents_per_mb, hot_cost=cfg.hot_cost_cents_per_mb,
                     barrier_fraction=opts.barrier_fraction)


def _start_points(model: RelaxedModel, opts: SolverOptions) -> list:
    """The box centre, then uniform random points."""
    rng = np.random.default_rng(opts.seed)
    return [np.full(model.size, 0.5)] + [rng.uniform(0.0, 1.0, model.size)
                                         for _ in range(opts.multistarts - 1)]


def _plan_for(d1: StageOneDecision, Hrel, share, files, scenarios, cfg, opts):
    """Round, settle and refill the per-scenario plan for a fixed first stage."""
    plan, drops = [], 0
    for kk, sc in enumerate(scenarios):
        Hk = round_half_down(Hrel[kk]) * d1.accept
        d2, dk = settle_stage_two(Hk, d1, sc, files, cfg, opts, share[kk])
        drops += dk
        plan.append(d2)
    return plan, drops


def solve_stage_one(files: Sequence[FileSpec], scenarios: Sequence[Scenario], cfg: SystemConfig,
                    opts: SolverOptions | None = None, storage_only: bool = False,
                    incumbents: Sequence[StageOneDecision] = ()):
    """First-stage decision with a per-scenario second-stage plan.

    With ``storage_only=True`` the access terms are dropped (the two stages are
    treated independently) and the plan is left empty. Each feasible decision
    in ``incumbents`` is scored as a candidate of its own and seeds one extra
    start. Returns ``(StageOneDecision, list[StageTwoDecision], SolveReport)``.
    """
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    if len(files) == 0:
        raise InvalidInputError("file list is empty")
    validate_scenarios(scenarios, len(files))
    pen = PenaltyParams.from_config(cfg)
    data = _stage_one_data(files, scenarios, cfg, opts, storage_only)
    n, k = data.n, data.k
    lb, ub = np.zeros(2 * n + 2 * k * n), np.ones(2 * n + 2 * k * n)
    size = sizes_mb(files)
    p = np.array([sc.probability for sc in scenarios])
    K = len(scenarios)

    value = storage_bids(files) - 2 * cfg.cold_cost_cents_per_mb * size
    if not storage_only:
        value = value + cfg.num_slots * (p @ np.array([sc.access_bid_cents for sc in scenarios]))

    def score(d1, Hrel, share):
        plan, drops = [], 0
        if storage_only:
            plan = [StageTwoDecision.empty(n) for _ in scenarios]
        else:
            plan, drops = _plan_for(d1, Hrel, share, files, scenarios, cfg, opts)
        d1, plan, _ = complete_stage_one(d1, plan, files, scenarios, cfg, storage_only)
        obj = cm.profit(d1, plan, scenarios, files, cfg).total if not storage_only \
            else float(np.subtract(*cm.storage_profit_terms(d1, files, cfg)))
        return obj, d1, plan, drops

    warm = [d for d in incumbents if len(d) == n and check_stage_one_feasible(d, files, cfg).feasible]
    best = None
    finalists = []
    start_values = []
    total_iters = 0
    for d in warm:
        Hrel = np.repeat(d.accept[None, :].astype(float), K, axis=0)
        obj, d1, plan, drops = score(d, Hrel, np.full((K, n), 0.5))
        start_values.append(obj)
        finalists.append((obj, -1, d1, plan, 0.0, (1.0,), drops, drops == 0, float("nan")))

    model0 = RelaxedModel(data)
    warm_x = [model0.pack(d.accept.astype(float), d.hot_replica.astype(float),
                          np.repeat(d.accept[None, :].astype(float), k, axis=0),
                          np.full((k, n), 0.5)) for d in warm]
    starts = _start_points(model0, opts)
    for start, x0 in enumerate(starts + warm_x):
        model = RelaxedModel(data)
        ub_start = ub.copy()
        for dive in range(opts.max_dives + 1):
            x, iters, kkt, integ = _continuation(model, x0, lb, ub_start, opts, pen,
                                                 relax_first=start == 0)
            total_iters += iters
            a, r, h, s = model.split(x)
            A = round_half_down(a)
            R = round_half_down(a * r) * A
            d1 = StageOneDecision(A, R)
            rounding_ok = check_stage_one_feasible(d1, files, cfg).feasible
            d1, repairs = repair_stage_one(d1, files, cfg, value)
            if repairs == 0 or dive == opts.max_dives:
                break
            # fix the dropped files at zero and resolve from the current point
            dropped = np.flatnonzero(A > d1.accept)
            ub_start = ub_start.copy()
            ub_start[dropped] = 0.0
            x0 = np.minimum(x, ub_start)
            model = RelaxedModel(data)
        Hrel = np.minimum(a[None, :] * h, d1.accept[None, :]) if k else np.zeros((K, n))
        share = r[None, :] * s if k else np.zeros((K, n))
        obj, d1, plan, drops = score(d1, Hrel, share)
        rounding_ok &= drops == 0
        repairs += drops
        h_rel = np.zeros((K, n)) if storage_only else a[None, :] * h
        relaxed = relaxed_objective(a, a * r, h_rel, scenarios, files, cfg, pen)
        start_values.append(obj)
        if best is None or obj > best[0] + 1e-9:
            best = (obj, start, d1, plan, kkt, integ, repairs, rounding_ok, relaxed)

    # re-score the best start and every incumbent with the full second-stage solve
    finalists.insert(0, best)
    if not storage_only and opts.polish:
        opts2 = dataclasses.replace(opts, multistarts=1)
        for j, cand in enumerate(finalists):
            d1, plan = cand[2], cand[3]
            plan = [solve_stage_two(d1, sc, files, cfg, opts2, warm=d2)[0]
                    for sc, d2 in zip(scenarios, plan)]
            finalists[j] = (cm.profit(d1, plan, scenarios, files, cfg).total, cand[1], d1, plan,
                            *cand[4:])
    best = finalists[0]
    for cand in finalists[1:]:
        if cand[0] > best[0] + 1e-9:
            best = cand
    obj, start, d1, plan, kkt, integ, repairs, rounding_ok, relaxed = best
    slacks = dict(check_stage_one_feasible(d1, files, cfg).slacks)
    if not storage_only:
        for kk, (sc, d2) in enumerate(zip(scenarios, plan)):
            rep = check_stage_two_feasible(d2, d1, sc, files, cfg)
            if not rep.feasible:
                raise InfeasibleInstanceError(f"scenario {kk} plan violates {rep.violated}")
            slacks[f"latency[{kk}]"] = rep.slacks["latency"]
            slacks[f"stability[{kk}]"] = rep.slacks["stability"]
    report = SolveReport(objective=obj, relaxed_objective=relaxed, iterations=total_iters,
                         starts=opts.multistarts, best_start=start, kkt_residual=kkt,
                         slacks=slacks, wall_time=time.perf_counter() - t0, repairs=repairs,
                         rounding_feasible=rounding_ok, integrality=integ,
                         start_objectives=tuple(start_values),
                         plan_polished=bool(opts.polish and not storage_only))
    return d1, plan, report


def solve_pm(files: Sequence[FileSpec], scenarios: Sequence[Scenario], cfg: SystemConfig,
             opts: SolverOptions | None = None,
             storage_decision: StageOneDecision | None = None):
    """Joint two-stage solve seeded with the storage-only decision.

    The storage-only decision is scored as a candidate and seeds one start, so
    the result is never worse than keeping that decision and solving stage two
    on it. Pass ``storage_decision`` to reuse one already computed.
    """
    if storage_decision is None:
        storage_decision, _, _ = solve_stage_one(files, scenarios, cfg, opts, storage_only=True)
    return solve_stage_one(files, scenarios, cfg, opts, incumbents=[storage_decision])


# ---------------------------------------------------------------------------
# stage two


def solve_stage_two(d1: StageOneDecision, sc: Scenario, files: Sequence[FileSpec],
                    cfg: SystemConfig, opts: SolverOptions | None = None,
                    warm: StageTwoDecision | None = None):
    """Access acceptance and scheduling for one realized scenario.

    ``warm`` (e.g. the first-stage plan for this scenario) is scored as a
    candidate of its own and seeds one extra start after the regular ones;
    ``best_start`` is -1 when the warm decision itself wins.
    Returns ``(StageTwoDecision, SolveReport)``.
    """
    opts = opts or SolverOptions()
    t0 = time.perf_counter()
    n = len(files)
    if len(d1) != n:
        raise InvalidInputError("stage-one decision does not match the file population")
    rep1 = check_stage_one_feasible(d1, files, cfg)
    if not rep1.feasible:
        raise InvalidInputError(f"stage-one decision infeasible: {rep1.violated}")
    stored = np.flatnonzero(d1.accept)
    if stored.size == 0:
        report = SolveReport(0.0, 0.0, 0, 0, 0, 0.0, wall_time=time.perf_counter() - t0)
        return StageTwoDecision.empty(n), report

    pen = PenaltyParams.from_config(cfg)
    size = sizes_mb(files)
    R = d1.hot_replica
    rcfg = cfg.restricted()
    m = stored.size
    data = ModelData(size_mb=size[stored], storage_bid=np.zeros(m),
                     access_weight=sc.access_bid_cents[stored][None, :],
                     arrival=sc.arrival_rate_per_s[stored][None, :],
                     latency_s=sc.latency_req_s[stored][None, :], capacities=rcfg.capacities,
                     rates=rcfg.rates, stability_margin=cfg.stability_margin,
                     cold_cost=cfg.cold_cost_cents_per_mb, hot_cost=cfg.hot_cost_cents_per_mb,
                     storage_terms=False, capacity_terms=False,
                     barrier_fraction=opts.barrier_fraction)
    Rs = R[stored].astype(float)
    lb = np.concatenate([np.ones(m), Rs, np.zeros(m), np.zeros(m)])
    ub = np.concatenate([np.ones(m), Rs, np.ones(m), Rs])
    warm_x = None
    if warm is not None:
        hw = warm.accept_access[stored].astype(float)
        tot = np.maximum(warm.sched_prob[stored].sum(axis=1), 1e-12)
        sw = np.where(hw > 0, warm.sched_prob[stored, cm.HOT] / tot, 0.5) * Rs
        warm_x = np.concatenate([np.ones(m), Rs, hw, sw])

    best = None
    start_values = []
    total_iters = 0
    if warm is not None:
        share = np.where(warm.accept_access > 0, warm.sched_prob[:, cm.HOT], 0.0)
        d2, drops = settle_stage_two(warm.accept_access, d1, sc, files, cfg, opts, share)
        obj = float(np.dot(sc.access_bid_cents, d2.accept_access))
        start_values.append(obj)
        best = (obj, -1, d2, 0.0, (1.0,), drops, float("nan"))
    starts = _start_points(RelaxedModel(data), opts)
    for start, x0 in enumerate(starts + ([warm_x] if warm_x is not None else [])):
        model = RelaxedModel(data)
        x, iters, kkt, integ = _continuation(model, x0, lb, ub, opts, pen,
                                             relax_first=start == 0)
        total_iters += iters
        _, _, h, s = model.split(x)
        H = np.zeros(n, dtype=np.int64)
        H[stored] = round_half_down(h[0])
        share = np.zeros(n)
        share[stored] = s[0] * Rs
        d2, drops = settle_stage_two(H, d1, sc, files, cfg, opts, share)
        obj = float(np.dot(sc.access_bid_cents, d2.accept_access))
        relaxed = float(np.dot(sc.access_bid_cents[stored], h[0])
                        + pen.weight * np.sum(_g1_safe(h[0], pen.alpha)))
        start_values.append(obj)
        if best is None or obj > best[0] + 1e-9:
            best = (obj, start, d2, kkt, integ, drops, relaxed)

    obj, start, d2, kkt, integ, drops, relaxed = best
    rep = check_stage_two_feasible(d2, d1, sc, files, cfg)
    if not rep.feasible:
        raise InfeasibleInstanceError(f"stage-two decision violates {rep.violated}")
    report = SolveReport(objective=obj, relaxed_objective=relaxed, iterations=total_iters,
                         starts=opts.multistarts, best_start=start, kkt_residual=kkt,
                         slacks=dict(rep.slacks), wall_time=time.perf_counter() - t0,
                         repairs=drops, rounding_feasible=drops == 0, integrality=integ,
                         start_objectives=tuple(start_values))
    return d2, report


def _g1_safe(v, alpha):
    return g1(np.clip(v, 0, 1), alpha)


# ---------------------------------------------------------------------------
# brute force


@dataclass
class OracleResult:
    stage_one: StageOneDecision
    stage_two: list
    profit: float


def _best_schedule(H, R, sc: Scenario, size, cfg: SystemConfig, grid: int):
    """Grid search over hot shares of accepted replicated files; None if no grid point is feasible."""
    n = len(H)
    acc = np.flatnonzero(H)
    free = acc[R[acc] == 1]
    levels = np.arange(grid + 1) / grid
    rates = cfg.rates
    limit = (1 - cfg.stability_margin) * rates
    bits = cm.MEGABITS_PER_MB * size
    lam = sc.arrival_rate_per_s
    lreq = sc.latency_req_s
    head = levels if free.size else np.zeros(1)
    tail = np.array(list(itertools.product(levels, repeat=max(free.size - 1, 0))))
    for first in head:
        combos = np.column_stack([np.full(len(tail), first), tail])[:, :free.size]
        m = combos.shape[0]
        pi = np.zeros((m, n, 2))
        pi[:, acc, cm.COLD] = 1.0
        if free.size:
            pi[:, free, cm.HOT] = combos
            pi[:, free, cm.COLD] = 1.0 - combos
        f = np.einsum("i,mij->mj", lam * bits, pi)
        hq = np.einsum("i,mij->mj", lam * bits ** 2, pi)
        stable = np.all(f <= limit[None, :], axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            W = np.where(f < rates[None, :], hq / (rates[None, :] * (rates[None, :] - f)), np.inf)
            T = np.sum(pi * (bits[None, :, None] / rates[None, None, :] + W[:, None, :]), axis=2)
        ok = stable & np.all(T[:, acc] <= lreq[acc][None, :], axis=1)
        if ok.any():
            return pi[int(np.argmax(ok))]
    return None


def brute_force_oracle(files: Sequence[FileSpec], scenarios: Sequence[Scenario],
                       cfg: SystemConfig, grid_resolution: int = 32) -> OracleResult:
    """Exact-on-grid optimum of the deterministic-equivalent problem for tiny instances."""
    n, K = len(files), len(scenarios)
    if n > 4 or K > 3 or grid_resolution > 64:
        raise InstanceTooLargeError("oracle limited to I <= 4, K <= 3, grid <= 64")
    if grid_resolution < 1:
        raise InvalidInputError("grid_resolution must be >= 1")
    if n == 0:
        return OracleResult(StageOneDecision.empty(0), [StageTwoDecision.empty(0)] * K, 0.0)
    validate_scenarios(scenarios, n)
    size = sizes_mb(files)
    cache: dict = {}

    def stage_two_best(A, R, kk):
        key = (A.tobytes(), R.tobytes(), kk)
        if key in cache:
            return cache[key]
        sc = scenarios[kk]
        best = (0.0, StageTwoDecision.empty(n))
        stored = np.flatnonzero(A)
        for bits_ in itertools.product((0, 1), repeat=stored.size):
            H = np.zeros(n, dtype=np.int64)
            H[stored] = bits_
            val = float(np.dot(sc.access_bid_cents, H))
            if val <= best[0]:
                continue
            pi = _best_schedule(H, R, sc, size, cfg, grid_resolution)
            if pi is not None:
                best = (val, StageTwoDecision(H, pi))
        cache[key] = best
        return best

    best = None
    for code in itertools.product((0, 1, 2), repeat=n):
        code = np.array(code)
        A = (code > 0).astype(np.int64)
        R = (code == 2).astype(np.int64)
        d1 = StageOneDecision(A, R)
        if not check_stage_one_feasible(d1, files, cfg).feasible:
            continue
        rev, cost = cm.storage_profit_terms(d1, files, cfg)
        d2s, acc = [], 0.0
        for kk, sc in enumerate(scenarios):
            val, d2 = stage_two_best(A, R, kk)
            d2s.append(d2)
            acc += sc.probability * val
        total = rev - cost + cfg.num_slots * acc
        if best is None or total > best.profit + 1e-12:
            best = OracleResult(d1, d2s, total)
    if best is None:
        raise InfeasibleInstanceError("no first-stage decision satisfies the capacities")
    return best
