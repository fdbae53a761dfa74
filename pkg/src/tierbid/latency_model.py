"""Closed-form M/G/1 latency for probabilistically scheduled file requests.

Requests for file ``i`` reach tier ``j`` as a Poisson stream of rate
``lambda_i * pi_ij``. Serving one request takes ``8 * S_i`` megabits times a
per-megabit time that is exponential with mean ``1 / mu_j``, so each tier is an
M/G/1 queue whose service time is a mixture of exponentials.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core_model import (MEGABITS_PER_MB, FileSpec, Scenario, StageOneDecision,
                         StageTwoDecision, SystemConfig, sizes_mb)
from .errors import DimensionError, InstabilityError, UndefinedMomentsError


@dataclass(frozen=True)
class TierLoad:
    agg_arrival_per_s: float
    f_mbps: float
    h_mb2ps: float

    def __post_init__(self):
        if min(self.agg_arrival_per_s, self.f_mbps, self.h_mb2ps) < 0:
            raise ValueError("tier load components must be non-negative")


def tier_load(rates_per_s, size_mb) -> TierLoad:
    """Aggregate the per-file request rates ``lambda_i * pi_ij`` hitting one tier."""
    lam = np.asarray(rates_per_s, dtype=float)
    bits = MEGABITS_PER_MB * np.asarray(size_mb, dtype=float)
    return TierLoad(float(lam.sum()), float(np.dot(lam, bits)), float(np.dot(lam, bits ** 2)))


def service_moments(load: TierLoad, mu_mbps: float) -> tuple[float, float]:
    """Mean and second moment of the service time of a request drawn from the mix."""
    g = load.agg_arrival_per_s
    if g <= 0:
        raise UndefinedMomentsError("no traffic reaches this tier")
    return load.f_mbps / (mu_mbps * g), 2.0 * load.h_mb2ps / (mu_mbps ** 2 * g)


def waiting_time(load: TierLoad, mu_mbps: float) -> float:
    """Pollaczek-Khinchin mean wait ``h / (mu (mu - f))`` in seconds."""
    if load.f_mbps >= mu_mbps:
        raise InstabilityError(
            f"offered load {load.f_mbps:.6g} Mb/s reaches service rate {mu_mbps:.6g} Mb/s")
    return load.h_mb2ps / (mu_mbps * (mu_mbps - load.f_mbps))


def offered_load(pi, arrival_rate_per_s, size_mb) -> np.ndarray:
    """Offered load ``sum_i lambda_i pi_ij 8 S_i`` per tier, Mb/s."""
    pi = np.asarray(pi, dtype=float)
    bits = MEGABITS_PER_MB * np.asarray(size_mb, dtype=float)
    return (np.asarray(arrival_rate_per_s, dtype=float) * bits) @ pi


def waiting_times(pi, arrival_rate_per_s, size_mb, rates_mbps) -> np.ndarray:
    """Mean waiting time per tier; raises when a tier is unstable."""
    pi = np.asarray(pi, dtype=float)
    lam = np.asarray(arrival_rate_per_s, dtype=float)
    out = np.empty(pi.shape[1])
    for j, mu in enumerate(rates_mbps):
        out[j] = waiting_time(tier_load(lam * pi[:, j], size_mb), mu)
    return out


def per_file_latency(pi, arrival_rate_per_s, size_mb, rates_mbps) -> np.ndarray:
    """Expected latency of every file, seconds: service plus waiting, weighted by ``pi``."""
    pi = np.asarray(pi, dtype=float)
    rates = np.asarray(rates_mbps, dtype=float)
    if pi.ndim != 2 or pi.shape[0] != len(size_mb):
        raise DimensionError("pi must have shape (num_files, num_tiers)")
    bits = MEGABITS_PER_MB * np.asarray(size_mb, dtype=float)
    lam = np.asarray(arrival_rate_per_s, dtype=float)
    wait = np.zeros(len(rates))
    for j, mu in enumerate(rates):
        used = pi[:, j] > 0
        if not used.any():
            continue
        wait[j] = waiting_time(tier_load(lam * pi[:, j], size_mb), mu)
    service = bits[:, None] / rates[None, :]
    return np.sum(pi * (service + wait[None, :]), axis=1)


def expected_latency(i: int, pi, sc: Scenario, files: Sequence[FileSpec],
                     cfg: SystemConfig) -> float:
    """Expected latency of file ``i`` in seconds; zero for a file with no traffic."""
    return float(per_file_latency(pi, sc.arrival_rate_per_s, sizes_mb(files), cfg.rates)[i])


def latency_slacks(d2: StageTwoDecision, d1: StageOneDecision, sc: Scenario,
                   files: Sequence[FileSpec], cfg: SystemConfig) -> np.ndarray:
    """``l_i - T_i`` per file in seconds. Negative on an accepted file means a violation."""
    if len(d2) != len(files) or len(d1) != len(files):
        raise DimensionError("decision length does not match file population")
    lat = per_file_latency(d2.sched_prob, sc.arrival_rate_per_s, sizes_mb(files), cfg.rates)
    return sc.latency_req_s - lat
