"""Sigmoid integrality penalty and the penalised (relaxed) objective."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .core_model import FileSpec, Scenario, SystemConfig, sizes_mb, storage_bids
from .errors import InvalidInputError


@dataclass(frozen=True)
class PenaltyParams:
    alpha: float = 1e6
    weight: float = 1e9

    def __post_init__(self):
        if not (self.alpha > 0 and self.weight > 0):
            raise InvalidInputError("penalty alpha and weight must be positive")

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "PenaltyParams":
        return cls(cfg.penalty_alpha, cfg.penalty_weight)


def g(x, alpha):
    """``1/(1+exp(a x)) - 1/(1+exp(a (x-1)))``; about -1 inside (0, 1), 0 far outside."""
    x = np.asarray(x, dtype=float)
    return expit(-alpha * x) - expit(-alpha * (x - 1.0))


def g1(x, alpha):
    """Shifted penalty: exactly zero at 0 and 1, negative strictly between."""
    return g(x, alpha) + 0.5 - expit(-alpha)


def _logistic_slope(t):
    # sigma'(t) = sigma(t) sigma(-t), finite for any t
    return expit(t) * expit(-t)


def g_prime(x, alpha):
    x = np.asarray(x, dtype=float)
    return alpha * (_logistic_slope(alpha * (x - 1.0)) - _logistic_slope(alpha * x))


g1_prime = g_prime


def relaxed_objective(a, r, h, scenarios: Sequence[Scenario], files: Sequence[FileSpec],
                      cfg: SystemConfig, pen: PenaltyParams | None = None) -> float:
    """Expected profit at fractional ``A``, ``R``, ``H`` plus ``C * sum g1`` over all of them.

    ``h`` has shape ``(K, I)``. Nothing here enforces the constraints; the caller
    is expected to pass points that satisfy them.
    """
    pen = PenaltyParams.from_config(cfg) if pen is None else pen
    a = np.asarray(a, dtype=float)
    r = np.asarray(r, dtype=float)
    h = np.asarray(h, dtype=float).reshape(len(scenarios), len(files))
    for v in (a, r, h):
        if np.any(v < 0) or np.any(v > 1):
            raise InvalidInputError("relaxed variables must lie in [0, 1]")
    s = sizes_mb(files)
    p = np.array([sc.probability for sc in scenarios])
    q = np.array([sc.access_bid_cents for sc in scenarios]).reshape(len(scenarios), len(files))
    value = (np.dot(storage_bids(files), a)
             - cfg.cold_cost_cents_per_mb * np.dot(s, 2 * a - r)
             - cfg.hot_cost_cents_per_mb * np.dot(s, r)
             + cfg.num_slots * float(np.sum(p[:, None] * q * h)))
    penalty = np.sum(g1(a, pen.alpha)) + np.sum(g1(r, pen.alpha)) + np.sum(g1(h, pen.alpha))
    return float(value + pen.weight * penalty)
