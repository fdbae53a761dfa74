"""Domain types, unit conventions and the linear constraints of the two-stage model.

Units used throughout the package:

* file sizes in megabytes (MB); the queueing math works in megabits, 1 MB = 8 Mb
* service rates in megabits per second; 1 Gb/s = 1000 Mb/s (decimal prefixes)
* capacities in MB; 1 GB = 1000 MB
* money in cents; storage costs in cents per MB
* latency in seconds internally, milliseconds in scenario data and reports

Tier index 0 is cold storage and tier index 1 is hot storage.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError

MEGABITS_PER_MB = 8.0
MB_PER_GB = 1000.0
MBPS_PER_GBPS = 1000.0
MS_PER_S = 1000.0

COLD, HOT = 0, 1


def gb_to_mb(gb: float) -> float:
    return gb * MB_PER_GB


def mb_to_gb(mb: float) -> float:
    return mb / MB_PER_GB


def gbps_to_mbps(gbps: float) -> float:
    return gbps * MBPS_PER_GBPS


def mbps_to_gbps(mbps: float) -> float:
    return mbps / MBPS_PER_GBPS


def per_gb_to_per_mb(cents_per_gb: float) -> float:
    return cents_per_gb / MB_PER_GB


def per_mb_to_per_gb(cents_per_mb: float) -> float:
    return cents_per_mb * MB_PER_GB


def ms_to_s(ms):
    return np.asarray(ms, dtype=float) / MS_PER_S


def s_to_ms(s):
    return np.asarray(s, dtype=float) * MS_PER_S


@dataclass(frozen=True)
class SystemConfig:
    """Tier capacities, rates, costs and the relaxation hyperparameters.

    The defaults are the base setting of the numerical study: 400 GB cold,
    200 GB hot, 100/200 Gb/s, 50/80 cents per GB, 20 access slots.
    """

    cold_capacity_mb: float = 400_000.0
    hot_capacity_mb: float = 200_000.0
    cold_rate_mbps: float = 100_000.0
    hot_rate_mbps: float = 200_000.0
    cold_cost_cents_per_mb: float = 0.05
    hot_cost_cents_per_mb: float = 0.08
    num_slots: int = 20
    stability_margin: float = 1e-6
    restriction_eps: float = 1e-3
    penalty_alpha: float = 1e6
    penalty_weight: float = 1e9

    def __post_init__(self):
        positive = ("cold_capacity_mb", "hot_capacity_mb", "cold_rate_mbps",
                    "hot_rate_mbps", "cold_cost_cents_per_mb", "hot_cost_cents_per_mb",
                    "penalty_alpha", "penalty_weight")
        for name in positive:
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidInputError(f"{name} must be positive, got {v}")
        if int(self.num_slots) != self.num_slots or self.num_slots < 1:
            raise InvalidInputError(f"num_slots must be an integer >= 1, got {self.num_slots}")
        for name in ("stability_margin", "restriction_eps"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise InvalidInputError(f"{name} must lie in (0, 1), got {v}")

    @property
    def capacities(self) -> np.ndarray:
        return np.array([self.cold_capacity_mb, self.hot_capacity_mb])

    @property
    def rates(self) -> np.ndarray:
        return np.array([self.cold_rate_mbps, self.hot_rate_mbps])

    def restricted(self, eps: float | None = None) -> "SystemConfig":
        """Capacities and service rates shrunk by ``1 - eps``."""
        eps = self.restriction_eps if eps is None else eps
        return replace(
            self,
            cold_capacity_mb=self.cold_capacity_mb * (1 - eps),
            hot_capacity_mb=self.hot_capacity_mb * (1 - eps),
            cold_rate_mbps=self.cold_rate_mbps * (1 - eps),
            hot_rate_mbps=self.hot_rate_mbps * (1 - eps),
        )

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class FileSpec:
    id: int
    size_mb: float
    storage_bid_cents: float

    def __post_init__(self):
        if not self.size_mb > 0:
            raise InvalidInputError(f"file {self.id}: size must be positive")
        if not self.storage_bid_cents >= 0:
            raise InvalidInputError(f"file {self.id}: storage bid must be non-negative")


@dataclass(frozen=True, eq=False)
class Scenario:
    """One joint realization of access bids, latency requirements and arrival rates."""

    index: int
    probability: float
    access_bid_cents: np.ndarray
    latency_req_ms: np.ndarray
    arrival_rate_per_s: np.ndarray

    def __post_init__(self):
        for name in ("access_bid_cents", "latency_req_ms", "arrival_rate_per_s"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.access_bid_cents)
        if len(self.latency_req_ms) != n or len(self.arrival_rate_per_s) != n:
            raise DimensionError("scenario arrays must share one length")
        if not 0.0 <= self.probability <= 1.0:
            raise InvalidInputError(f"scenario probability {self.probability} outside [0, 1]")
        if np.any(self.access_bid_cents < 0) or np.any(self.arrival_rate_per_s < 0):
            raise InvalidInputError("access bids and arrival rates must be non-negative")
        if np.any(~(self.latency_req_ms > 0)):
            raise InvalidInputError("latency requirements must be positive")

    @property
    def num_files(self) -> int:
        return len(self.access_bid_cents)

    @property
    def latency_req_s(self) -> np.ndarray:
        return ms_to_s(self.latency_req_ms)

    def with_probability(self, p: float) -> "Scenario":
        return replace(self, probability=p)


def validate_scenarios(scenarios: Sequence[Scenario], num_files: int | None = None,
                       atol: float = 1e-9) -> None:
    if len(scenarios) == 0:
        raise InvalidInputError("at least one scenario is required")
    total = sum(s.probability for s in scenarios)
    if abs(total - 1.0) > atol:
        raise InvalidInputError(f"scenario probabilities sum to {total}, not 1")
    if num_files is not None:
        for s in scenarios:
            if s.num_files != num_files:
                raise DimensionError(
                    f"scenario {s.index} covers {s.num_files} files, expected {num_files}")


@dataclass(frozen=True, eq=False)
class StageOneDecision:
    accept: np.ndarray
    hot_replica: np.ndarray

    def __post_init__(self):
        a = np.array(self.accept, dtype=np.int64)
        r = np.array(self.hot_replica, dtype=np.int64)
        if a.shape != r.shape or a.ndim != 1:
            raise DimensionError("accept and hot_replica must be equal-length vectors")
        for arr in (a, r):
            arr.setflags(write=False)
        object.__setattr__(self, "accept", a)
        object.__setattr__(self, "hot_replica", r)

    @classmethod
    def empty(cls, n: int) -> "StageOneDecision":
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))

    def __len__(self):
        return len(self.accept)

    def __eq__(self, other):
        return (isinstance(other, StageOneDecision)
                and np.array_equal(self.accept, other.accept)
                and np.array_equal(self.hot_replica, other.hot_replica))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class StageTwoDecision:
    """Access acceptance ``H`` and scheduling probabilities ``pi`` (shape ``(I, 2)``)."""

    accept_access: np.ndarray
    sched_prob: np.ndarray

    def __post_init__(self):
        h = np.array(self.accept_access, dtype=np.int64)
        pi = np.array(self.sched_prob, dtype=float)
        if h.ndim != 1 or pi.shape != (len(h), 2):
            raise DimensionError("sched_prob must have shape (num_files, 2)")
        h.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "accept_access", h)
        object.__setattr__(self, "sched_prob", pi)

    @classmethod
    def empty(cls, n: int) -> "StageTwoDecision":
        return cls(np.zeros(n, dtype=np.int64), np.zeros((n, 2)))

    def __len__(self):
        return len(self.accept_access)

    def __eq__(self, other):
        return (isinstance(other, StageTwoDecision)
                and np.array_equal(self.accept_access, other.accept_access)
                and np.array_equal(self.sched_prob, other.sched_prob))

    __hash__ = None


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    slacks: dict = field(default_factory=dict)
    violated: tuple = ()

    def __bool__(self):
        return self.feasible


@dataclass(frozen=True)
class ProfitBreakdown:
    storage_revenue: float
    storage_cost: float
    access_profit: float

    @property
    def storage_profit(self) -> float:
        return self.storage_revenue - self.storage_cost

    @property
    def total(self) -> float:
        return self.storage_profit + self.access_profit


def sizes_mb(files: Sequence[FileSpec]) -> np.ndarray:
    return np.array([f.size_mb for f in files], dtype=float)


def storage_bids(files: Sequence[FileSpec]) -> np.ndarray:
    return np.array([f.storage_bid_cents for f in files], dtype=float)


def _check_len(n: int, *arrays) -> None:
    for arr in arrays:
        if len(arr) != n:
            raise DimensionError(f"decision covers {len(arr)} files, population has {n}")


def _is_binary(x) -> bool:
    return bool(np.all((x == 0) | (x == 1)))


def storage_usage(d: StageOneDecision, files: Sequence[FileSpec]) -> tuple[float, float]:
    """Megabytes occupied in (cold, hot) storage."""
    s = sizes_mb(files)
    cold = float(np.sum(s * (2 * d.accept - d.hot_replica)))
    hot = float(np.sum(s * d.hot_replica))
    return cold, hot


def check_stage_one_feasible(d: StageOneDecision, files: Sequence[FileSpec],
                             cfg: SystemConfig) -> FeasibilityReport:
    """Capacity constraints on both tiers and ``R <= A``."""
    if len(files) == 0:
        raise InvalidInputError("file list is empty")
    _check_len(len(files), d.accept)
    cold, hot = storage_usage(d, files)
    slacks = {
        "cold_capacity": cfg.cold_capacity_mb - cold,
        "hot_capacity": cfg.hot_capacity_mb - hot,
        "replica_implies_accept": (d.accept - d.hot_replica).astype(float),
        "cold_usage_mb": cold,
        "hot_usage_mb": hot,
    }
    violated = []
    if not (_is_binary(d.accept) and _is_binary(d.hot_replica)):
        violated.append("binary")
    if slacks["cold_capacity"] < 0:
        violated.append("cold_capacity")
    if slacks["hot_capacity"] < 0:
        violated.append("hot_capacity")
    if np.any(slacks["replica_implies_accept"] < 0):
        violated.append("replica_implies_accept")
    return FeasibilityReport(not violated, slacks, tuple(violated))


def check_stage_two_feasible(d2: StageTwoDecision, d1: StageOneDecision, sc: Scenario,
                             files: Sequence[FileSpec], cfg: SystemConfig,
                             prob_tol: float = 1e-12) -> FeasibilityReport:
    """Access constraints for one scenario, including stability and latency.

    ``prob_tol`` only absorbs floating-point residue in ``pi_cold + pi_hot = H``;
    capacity, stability and latency comparisons are exact.
    """
    from .latency_model import offered_load, per_file_latency

    n = len(files)
    _check_len(n, d1.accept, d2.accept_access, sc.access_bid_cents)
    pi = d2.sched_prob
    if np.any(np.isnan(pi)):
        raise DimensionError("scheduling probabilities contain NaN")
    h = d2.accept_access
    slacks = {
        "access_implies_stored": (d1.accept - h).astype(float),
        "hot_only_if_replicated": d1.hot_replica - pi[:, HOT],
        "schedule_sums_to_accept": pi.sum(axis=1) - h,
    }
    violated = []
    if not _is_binary(h):
        violated.append("binary")
    if np.any(pi < 0) or np.any(pi > 1):
        violated.append("probability_range")
    if np.any(slacks["access_implies_stored"] < 0):
        violated.append("access_implies_stored")
    if np.any(slacks["hot_only_if_replicated"] < 0):
        violated.append("hot_only_if_replicated")
    if np.any(np.abs(slacks["schedule_sums_to_accept"]) > prob_tol):
        violated.append("schedule_sums_to_accept")

    s = sizes_mb(files)
    load = offered_load(pi, sc.arrival_rate_per_s, s)
    limit = (1 - cfg.stability_margin) * cfg.rates
    slacks["stability"] = limit - load
    if np.any(slacks["stability"] < 0):
        violated.append("stability")
        slacks["latency"] = np.where(h > 0, -np.inf, sc.latency_req_s)
        violated.append("latency")
    else:
        lat = per_file_latency(pi, sc.arrival_rate_per_s, s, cfg.rates)
        slacks["latency"] = sc.latency_req_s - lat
        if np.any(slacks["latency"][h > 0] < 0):
            violated.append("latency")
    return FeasibilityReport(not violated, slacks, tuple(violated))


def storage_profit_terms(d: StageOneDecision, files: Sequence[FileSpec],
                         cfg: SystemConfig) -> tuple[float, float]:
    s = sizes_mb(files)
    revenue = float(np.sum(storage_bids(files) * d.accept))
    cost = float(np.sum(s * (2 * d.accept - d.hot_replica)) * cfg.cold_cost_cents_per_mb
                 + np.sum(s * d.hot_replica) * cfg.hot_cost_cents_per_mb)
    return revenue, cost


def profit(d1: StageOneDecision, d2s: Sequence[StageTwoDecision], scenarios: Sequence[Scenario],
           files: Sequence[FileSpec], cfg: SystemConfig, mode: str = "expected",
           slots: Sequence[int] | None = None) -> ProfitBreakdown:
    """Profit decomposition of a two-stage decision.

    ``mode="expected"``: ``d2s[k]`` is the decision for ``scenarios[k]`` and the
    access term is ``T * sum_k p_k sum_i q_ik H_ik``.

    ``mode="realized"``: ``d2s[t]`` is the decision taken in slot ``t`` and
    ``slots[t]`` the position in ``scenarios`` realized in that slot; the access
    term sums the bids actually accepted.
    """
    revenue, cost = storage_profit_terms(d1, files, cfg)
    if mode == "expected":
        if len(d2s) != len(scenarios):
            raise DimensionError("one stage-two decision per scenario is required")
        access = cfg.num_slots * sum(
            sc.probability * float(np.dot(sc.access_bid_cents, d2.accept_access))
            for sc, d2 in zip(scenarios, d2s))
    elif mode == "realized":
        if slots is None or len(slots) != len(d2s):
            raise DimensionError("realized mode needs one scenario index per slot decision")
        access = sum(float(np.dot(scenarios[k].access_bid_cents, d2.accept_access))
                     for k, d2 in zip(slots, d2s))
    else:
        raise ValueError(f"unknown profit mode {mode!r}")
    return ProfitBreakdown(revenue, cost, access)
