"""Synthetic tenant populations and second-stage scenario sets.

Five file types with sizes 64..1024 MB. Storage bids are ``S * U[0.1, 0.3]``
cents. Per scenario, each file draws a Poisson access rate around its type
mean (requests per hour), a latency requirement
``U[30 + S'/5e6, 30 + S'/1e6]`` ms and bids
``q = 50 S ln(lambda + 1) / l^2`` cents, where ``S'`` is the size expressed in
``latency_size_unit`` units per MB (bytes by default).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core_model import FileSpec, Scenario, sizes_mb, validate_scenarios
from .errors import InvalidInputError

TYPE_SIZES_MB = (64.0, 128.0, 256.0, 512.0, 1024.0)
TYPE_MEAN_ARRIVALS_PER_HOUR = (20.0, 10.0, 8.0, 4.0, 2.0)
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class GeneratorSpec:
    num_files: int = 1000
    type_mix: tuple = (0.2, 0.2, 0.2, 0.2, 0.2)
    num_scenarios: int = 10
    seed: int = 0
    type_sizes_mb: tuple = TYPE_SIZES_MB
    mean_arrivals: tuple = TYPE_MEAN_ARRIVALS_PER_HOUR
    storage_bid_per_mb: tuple = (0.1, 0.3)
    # seconds per unit of the drawn arrival rate; 3600 turns per-hour draws into per-second rates
    arrival_time_unit_s: float = 3600.0
    # size units per MB inside the latency-requirement formula; 1e6 reads S in bytes
    latency_size_unit: float = 1e6
    latency_base_ms: float = 30.0
    latency_divisors: tuple = (5e6, 1e6)
    bid_coefficient: float = 50.0
    # draws used for the empirical scenario distribution; None means num_scenarios
    probability_events: int | None = None

    def __post_init__(self):
        if self.num_files < 1 or self.num_scenarios < 1:
            raise InvalidInputError("num_files and num_scenarios must be >= 1")
        mix = np.asarray(self.type_mix, dtype=float)
        if len(mix) != len(self.type_sizes_mb) or len(self.mean_arrivals) != len(mix):
            raise InvalidInputError("type_mix, type sizes and mean arrivals must align")
        if np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
            raise InvalidInputError("type_mix must be a probability vector")
        lo, hi = self.storage_bid_per_mb
        if not 0 <= lo <= hi:
            raise InvalidInputError("storage bid range must satisfy 0 <= lo <= hi")
        if self.arrival_time_unit_s <= 0 or self.latency_size_unit <= 0:
            raise InvalidInputError("unit conversions must be positive")

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), stream])


@dataclass(frozen=True, eq=False)
class Instance:
    """A file population with its scenario set; the unit of replay."""

    files: tuple
    scenarios: tuple
    meta: dict = field(default_factory=dict)


def file_types(files: Sequence[FileSpec], spec: GeneratorSpec) -> np.ndarray:
    sizes = np.asarray(spec.type_sizes_mb)
    s = sizes_mb(files)
    idx = np.argmin(np.abs(s[:, None] - sizes[None, :]), axis=1)
    if not np.allclose(sizes[idx], s):
        raise InvalidInputError("file sizes do not match the generator's type sizes")
    return idx


def generate_files(spec: GeneratorSpec) -> list[FileSpec]:
    rng = spec.rng(0)
    types = rng.choice(len(spec.type_mix), size=spec.num_files, p=np.asarray(spec.type_mix))
    size = np.asarray(spec.type_sizes_mb)[types]
    lo, hi = spec.storage_bid_per_mb
    bids = size * rng.uniform(lo, hi, size=spec.num_files)
    return [FileSpec(i, float(size[i]), float(bids[i])) for i in range(spec.num_files)]


def access_bid(size_mb, arrivals, latency_ms, coefficient: float = 50.0):
    """Access bid in cents, natural log."""
    return coefficient * np.asarray(size_mb) * np.log1p(arrivals) / np.asarray(latency_ms) ** 2


def latency_bounds_ms(size_mb, spec: GeneratorSpec) -> tuple[np.ndarray, np.ndarray]:
    units = np.asarray(size_mb, dtype=float) * spec.latency_size_unit
    d_lo, d_hi = spec.latency_divisors
    return spec.latency_base_ms + units / d_lo, spec.latency_base_ms + units / d_hi


def empirical_probabilities(counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    return counts / counts.sum()


def generate_scenarios(files: Sequence[FileSpec], spec: GeneratorSpec) -> list[Scenario]:
    rng = spec.rng(1)
    types = file_types(files, spec)
    size = sizes_mb(files)
    means = np.asarray(spec.mean_arrivals, dtype=float)[types]
    lo, hi = latency_bounds_ms(size, spec)
    K, n = spec.num_scenarios, len(files)
    draws = []
    for _ in range(K):
        lam = rng.poisson(means).astype(float)
        lat = rng.uniform(lo, hi, size=n)
        q = access_bid(size, lam, lat, spec.bid_coefficient)
        draws.append((q, lat, lam / spec.arrival_time_unit_s))
    events = spec.probability_events or K
    counts = np.bincount(rng.integers(0, K, size=events), minlength=K)
    probs = empirical_probabilities(counts)
    return [Scenario(k, float(probs[k]), q, lat, lam) for k, (q, lat, lam) in enumerate(draws)]


def realize_slots(scenarios: Sequence[Scenario], num_slots: int, seed: int) -> np.ndarray:
    """Scenario position drawn i.i.d. from the scenario probabilities, one per slot."""
    validate_scenarios(scenarios)
    p = np.array([sc.probability for sc in scenarios])
    p = p / p.sum()
    return np.random.default_rng(seed).choice(len(scenarios), size=num_slots, p=p)


def generate_instance(spec: GeneratorSpec) -> Instance:
    files = generate_files(spec)
    scenarios = generate_scenarios(files, spec)
    return Instance(tuple(files), tuple(scenarios), {"seed": spec.seed})


def instance_to_dict(inst: Instance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": dict(inst.meta),
        "files": [{"id": f.id, "size_mb": f.size_mb, "storage_bid_cents": f.storage_bid_cents}
                  for f in inst.files],
        "scenarios": [{
            "index": sc.index,
            "probability": sc.probability,
            "access_bid_cents": sc.access_bid_cents.tolist(),
            "latency_req_ms": sc.latency_req_ms.tolist(),
            "arrival_rate_per_s": sc.arrival_rate_per_s.tolist(),
        } for sc in inst.scenarios],
    }


def instance_from_dict(data: dict) -> Instance:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InvalidInputError(f"unsupported scenario schema version {version!r}")
    files = tuple(FileSpec(int(f["id"]), float(f["size_mb"]), float(f["storage_bid_cents"]))
                  for f in data["files"])
    scenarios = tuple(Scenario(int(s["index"]), float(s["probability"]),
                               np.array(s["access_bid_cents"], dtype=float),
                               np.array(s["latency_req_ms"], dtype=float),
                               np.array(s["arrival_rate_per_s"], dtype=float))
                      for s in data["scenarios"])
    validate_scenarios(scenarios, len(files))
    return Instance(files, scenarios, dict(data.get("meta", {})))


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1))


def load_instance(path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))
