"""Discrete-event check of the closed-form M/G/1 latency.

Each tier is simulated as a FIFO single-server queue fed by the superposition
of per-file Poisson streams. Request ``n`` of file ``i`` needs ``8 S_i``
megabits, each served at an exponential per-megabit time with mean ``1/mu``.
Waiting times follow the Lindley recursion

    W_{n+1} = max(0, W_n + X_n - A_{n+1})

which is evaluated without a Python loop: with ``D_n = X_{n-1} - A_n`` and
partial sums ``P_n``, ``W_n = P_n - min(0, min_{m<=n} P_m)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .core_model import MEGABITS_PER_MB
from .errors import InstabilityError, InvalidInputError
from .latency_model import tier_load, waiting_time

MIN_HORIZON = 10_000
NUM_BATCHES = 20


@dataclass(frozen=True)
class DesConfig:
    """One tier: service rate (Mb/s) and the per-file request streams it receives.

    ``horizon_requests`` counts requests kept after warmup; the warmup requests
    come on top, so that ``warmup_fraction`` of all simulated requests are
    discarded.
    """
    rate_mbps: float
    arrival_per_s: Sequence[float]     # lambda_i * pi_ij
    size_mb: Sequence[float]
    horizon_requests: int = 1_000_000
    warmup_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        lam = np.asarray(self.arrival_per_s, dtype=float)
        size = np.asarray(self.size_mb, dtype=float)
        if lam.ndim != 1 or lam.shape != size.shape:
            raise InvalidInputError("arrival_per_s and size_mb must be 1-d of equal length")
        if np.any(lam < 0) or np.any(size <= 0) or not np.all(np.isfinite(lam)):
            raise InvalidInputError("arrival rates must be >= 0 and sizes > 0")
        if not self.rate_mbps > 0:
            raise InvalidInputError("service rate must be positive")
        if self.horizon_requests < MIN_HORIZON:
            raise InvalidInputError(f"horizon must be at least {MIN_HORIZON} requests")
        if not 0.0 <= self.warmup_fraction < 0.5:
            raise InvalidInputError("warmup_fraction must lie in [0, 0.5)")

    @property
    def utilization(self) -> float:
        f = tier_load(self.arrival_per_s, self.size_mb).f_mbps
        return f / self.rate_mbps


@dataclass
class DesResult:
    mean_wait_s: float
    latency_per_file_s: np.ndarray     # NaN for files that sent no request
    ci_halfwidth: float                # 95% batch-means half width on the mean wait
    num_requests: int = 0
    arrival_rate_per_s: float = 0.0    # observed
    mean_in_system: float = 0.0        # time-average number of requests present
    requests_per_file: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __iter__(self):
        # unpacks as (mean_wait, per-file latency, CI half width)
        return iter((self.mean_wait_s, self.latency_per_file_s, self.ci_halfwidth))


def batch_means_halfwidth(x: np.ndarray, batches: int = NUM_BATCHES,
                          confidence: float = 0.95) -> float:
    """Student-t half width of the mean of ``x`` from ``batches`` contiguous batch means."""
    n = len(x) // batches
    if n < 1:
        raise InvalidInputError("too few observations for batch means")
    means = x[: n * batches].reshape(batches, n).mean(axis=1)
    return float(stats.t.ppf(0.5 + confidence / 2, batches - 1)
                 * means.std(ddof=1) / np.sqrt(batches))


def lindley_waits(interarrival: np.ndarray, service: np.ndarray) -> np.ndarray:
    """FIFO waiting times of an initially empty single-server queue."""
    d = np.empty_like(service)
    d[0] = 0.0
    d[1:] = service[:-1] - interarrival[1:]
    p = np.cumsum(d)
    return p - np.minimum(np.minimum.accumulate(p), 0.0)


def simulate_tier(cfg: DesConfig) -> DesResult:
    """Simulate one tier and return post-warmup wait and per-file latency estimates."""
    lam = np.asarray(cfg.arrival_per_s, dtype=float)
    bits = MEGABITS_PER_MB * np.asarray(cfg.size_mb, dtype=float)
    total = lam.sum()
    if total == 0:
        return DesResult(0.0, np.full(len(lam), np.nan), 0.0,
                         requests_per_file=np.zeros(len(lam), dtype=np.int64))
    load = tier_load(lam, cfg.size_mb)
    if load.f_mbps >= cfg.rate_mbps:
        raise InstabilityError(f"utilization {load.f_mbps / cfg.rate_mbps:.4g} >= 1, "
                               "the queue has no steady state")

    rng = np.random.default_rng(cfg.seed)
    keep = cfg.horizon_requests
    warm = int(np.ceil(keep * cfg.warmup_fraction / (1.0 - cfg.warmup_fraction)))
    n = warm + keep
    gaps = rng.exponential(1.0 / total, n)
    cls = rng.choice(len(lam), size=n, p=lam / total)
    service = bits[cls] * rng.exponential(1.0 / cfg.rate_mbps, n)
    wait = lindley_waits(gaps, service)

    w, x, c = wait[warm:], service[warm:], cls[warm:]
    sojourn = w + x
    counts = np.bincount(c, minlength=len(lam))
    sums = np.bincount(c, weights=sojourn, minlength=len(lam))
    with np.errstate(invalid="ignore", divide="ignore"):
        per_file = np.where(counts > 0, sums / counts, np.nan)
    # observation window runs from the first kept arrival to the last departure
    arrivals = np.cumsum(gaps)
    span = arrivals[-1] + sojourn[-1] - arrivals[warm]
    return DesResult(
        mean_wait_s=float(w.mean()),
        latency_per_file_s=per_file,
        ci_halfwidth=batch_means_halfwidth(w),
        num_requests=keep,
        arrival_rate_per_s=float((keep - 1) / (arrivals[-1] - arrivals[warm])),
        mean_in_system=float(sojourn.sum() / span),
        requests_per_file=counts,
    )


@dataclass
class ScheduleCheck:
    """DES against closed form for a whole schedule ``pi`` over all tiers."""
    analytic_wait_s: np.ndarray        # per tier
    simulated_wait_s: np.ndarray
    ci_halfwidth: np.ndarray
    analytic_latency_s: np.ndarray     # per file
    simulated_latency_s: np.ndarray
    utilization: np.ndarray

    @property
    def wait_rel_error(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.abs(self.simulated_wait_s - self.analytic_wait_s) / self.analytic_wait_s

    @property
    def latency_rel_error(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return (np.abs(self.simulated_latency_s - self.analytic_latency_s)
                    / self.analytic_latency_s)


def check_schedule(pi, arrival_per_s, size_mb, rates_mbps, horizon_requests: int = 1_000_000,
                   warmup_fraction: float = 0.1, seed: int = 0) -> ScheduleCheck:
    """Simulate every tier that receives traffic and compose per-file latencies.

    The simulated latency of file ``i`` is ``sum_j pi_ij * (mean sojourn of its
    requests at tier j)``, the empirical counterpart of the closed form.
    """
    pi = np.asarray(pi, dtype=float)
    lam = np.asarray(arrival_per_s, dtype=float)
    size = np.asarray(size_mb, dtype=float)
    rates = np.asarray(rates_mbps, dtype=float)
    if pi.shape != (len(lam), len(rates)):
        raise InvalidInputError("pi must have shape (num_files, num_tiers)")
    bits = MEGABITS_PER_MB * size
    m = len(rates)
    w_an, w_sim, hw, util = np.zeros(m), np.zeros(m), np.zeros(m), np.zeros(m)
    sojourn_an = np.zeros((len(lam), m))
    sojourn_sim = np.zeros((len(lam), m))
    for j, mu in enumerate(rates):
        tier_lam = lam * pi[:, j]
        sojourn_an[:, j] = bits / mu
        if tier_lam.sum() == 0:
            continue
        w_an[j] = waiting_time(tier_load(tier_lam, size), mu)
        sojourn_an[:, j] += w_an[j]
        res = simulate_tier(DesConfig(mu, tier_lam, size, horizon_requests,
                                      warmup_fraction, seed + j))
        w_sim[j], hw[j] = res.mean_wait_s, res.ci_halfwidth
        util[j] = tier_load(tier_lam, size).f_mbps / mu
        sojourn_sim[:, j] = np.nan_to_num(res.latency_per_file_s)
    used = pi > 0
    return ScheduleCheck(
        analytic_wait_s=w_an, simulated_wait_s=w_sim, ci_halfwidth=hw,
        analytic_latency_s=np.sum(np.where(used, pi * sojourn_an, 0.0), axis=1),
        simulated_latency_s=np.sum(np.where(used, pi * sojourn_sim, 0.0), axis=1),
        utilization=util,
    )


def load_levels(target_utilization: Sequence[float], size_mb: Sequence[float],
                mix: Sequence[float], rate_mbps: float) -> list[np.ndarray]:
    """Per-file arrival rates giving each target utilization for a fixed traffic mix."""
    bits = MEGABITS_PER_MB * np.asarray(size_mb, dtype=float)
    mix = np.asarray(mix, dtype=float)
    unit = float(np.dot(mix, bits)) / rate_mbps
    return [rho / unit * mix for rho in target_utilization]
