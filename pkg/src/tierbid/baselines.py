"""Comparison methods: independent stages (IS) and two greedy access heuristics.

All three take their first-stage decision from the storage-only problem. IS
then solves each realized scenario with the same machinery as the proposed
method; the greedy variants scan bids in a fixed order instead.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import core_model as cm
from .core_model import (FileSpec, Scenario, StageOneDecision, StageTwoDecision, SystemConfig,
                         check_stage_one_feasible, check_stage_two_feasible, sizes_mb)
from .errors import InvalidInputError
from .solver import SolverOptions, solve_stage_one, solve_stage_two

GH_VARIANTS = ("per_size", "per_rate")
# hot shares tried for a replicated file, hot first with spill to cold
HOT_SHARES = (1.0, 0.75, 0.5, 0.25, 0.0)


def solve_storage_only(files: Sequence[FileSpec], scenarios: Sequence[Scenario],
                       cfg: SystemConfig, opts: SolverOptions | None = None):
    """Stage one maximizing storage profit alone; returns ``(d1, report)``."""
    d1, _, report = solve_stage_one(files, scenarios, cfg, opts, storage_only=True)
    return d1, report


def solve_is(files: Sequence[FileSpec], scenarios: Sequence[Scenario], cfg: SystemConfig,
             opts: SolverOptions | None = None, d1: StageOneDecision | None = None):
    """Storage-only first stage, then the full second-stage solve per scenario.

    Returns ``(d1, [StageTwoDecision per scenario])``. Pass ``d1`` to reuse a
    storage-only decision already computed.
    """
    if d1 is None:
        d1, _ = solve_storage_only(files, scenarios, cfg, opts)
    plan = [solve_stage_two(d1, sc, files, cfg, opts)[0] for sc in scenarios]
    return d1, plan


def gh_order(sc: Scenario, files: Sequence[FileSpec], variant: str) -> np.ndarray:
    """File indices by descending q/S or q/lambda, ties by ascending id."""
    q = sc.access_bid_cents
    if variant == "per_size":
        key = q / sizes_mb(files)
    elif variant == "per_rate":
        lam = sc.arrival_rate_per_s
        with np.errstate(divide="ignore", invalid="ignore"):
            key = np.where(lam > 0, q / np.where(lam > 0, lam, 1.0),
                           np.where(q > 0, np.inf, 0.0))
    else:
        raise InvalidInputError(f"unknown greedy variant {variant!r}")
    ids = np.array([f.id for f in files])
    return np.lexsort((ids, -key))


def solve_gh(files: Sequence[FileSpec], d1: StageOneDecision, sc: Scenario, cfg: SystemConfig,
             variant: str = "per_size") -> StageTwoDecision:
    """Greedy access acceptance for one scenario.

    Each stored file in scan order is tentatively accepted with the first hot
    share from ``HOT_SHARES`` (hot only if replicated) that keeps every
    accepted file within its latency requirement and both tiers stable.
    """
    n = len(files)
    if len(d1) != n:
        raise InvalidInputError("stage-one decision does not match the file population")
    rep = check_stage_one_feasible(d1, files, cfg)
    if not rep.feasible:
        raise InvalidInputError(f"stage-one decision infeasible: {rep.violated}")
    H = np.zeros(n, dtype=np.int64)
    pi = np.zeros((n, 2))
    for i in gh_order(sc, files, variant):
        if not d1.accept[i] or sc.access_bid_cents[i] <= 0:
            continue
        shares = HOT_SHARES if d1.hot_replica[i] else (0.0,)
        H[i] = 1
        for share in shares:
            pi[i, cm.HOT] = share
            pi[i, cm.COLD] = 1.0 - share
            if check_stage_two_feasible(StageTwoDecision(H, pi), d1, sc, files, cfg).feasible:
                break
        else:
            H[i] = 0
            pi[i] = 0.0
    return StageTwoDecision(H, pi)
