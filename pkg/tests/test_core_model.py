import numpy as np
import pytest

from conftest import make_files, make_scenario
from tierbid import core_model as cm
from tierbid.core_model import (StageOneDecision, StageTwoDecision, SystemConfig,
                                check_stage_one_feasible, check_stage_two_feasible, profit)
from tierbid.errors import DimensionError, InvalidInputError
from tierbid.scenario_gen import GeneratorSpec, generate_instance


def test_unit_round_trips_are_exact():
    for v in (0.0, 1.0, 64.0, 400.0, 1234.5):
        assert cm.mb_to_gb(cm.gb_to_mb(v)) == v
        assert cm.mbps_to_gbps(cm.gbps_to_mbps(v)) == v
        assert cm.per_mb_to_per_gb(cm.per_gb_to_per_mb(v)) == pytest.approx(v, rel=0, abs=1e-12)
        assert cm.s_to_ms(cm.ms_to_s(v)) == v
    assert cm.gb_to_mb(400) == 400_000
    assert cm.gbps_to_mbps(100) == 100_000
    assert cm.per_gb_to_per_mb(50) == pytest.approx(0.05)
    assert cm.MEGABITS_PER_MB == 8


def test_default_config_is_the_base_setting():
    cfg = SystemConfig()
    assert cfg.capacities.tolist() == [400_000, 200_000]
    assert cfg.rates.tolist() == [100_000, 200_000]
    assert cfg.cold_cost_cents_per_mb == pytest.approx(0.05)
    assert cfg.hot_cost_cents_per_mb == pytest.approx(0.08)
    assert cfg.num_slots == 20
    assert cfg.penalty_alpha == 1e6 and cfg.penalty_weight == 1e9
    assert cfg.restriction_eps == 1e-3


@pytest.mark.parametrize("change", [dict(cold_capacity_mb=0), dict(hot_rate_mbps=-1),
                                    dict(num_slots=0), dict(stability_margin=1.0),
                                    dict(restriction_eps=0.0), dict(penalty_alpha=0)])
def test_config_rejects_bad_values(change):
    with pytest.raises(InvalidInputError):
        SystemConfig(**change)


def test_restricted_shrinks_capacity_and_rate():
    cfg = SystemConfig().restricted(0.01)
    assert cfg.cold_capacity_mb == pytest.approx(396_000)
    assert cfg.hot_rate_mbps == pytest.approx(198_000)
    assert cfg.cold_cost_cents_per_mb == pytest.approx(0.05)


def test_stage_one_two_unit_files():
    files = make_files([1, 1])
    cfg = SystemConfig(cold_capacity_mb=3, hot_capacity_mb=1)
    rep = check_stage_one_feasible(StageOneDecision([1, 1], [1, 0]), files, cfg)
    assert rep.feasible
    assert rep.slacks["cold_usage_mb"] == 3
    assert rep.slacks["hot_usage_mb"] == 1


def test_replica_without_accept_is_infeasible():
    rep = check_stage_one_feasible(StageOneDecision([0, 0], [1, 0]), make_files([1, 1]),
                                   SystemConfig())
    assert not rep.feasible
    assert "replica_implies_accept" in rep.violated


def test_full_population_overflows_base_cold_capacity():
    inst = generate_instance(GeneratorSpec(num_files=1000, seed=0))
    files = inst.files
    total = sum(f.size_mb for f in files)
    assert 2 * total > SystemConfig().cold_capacity_mb
    d = StageOneDecision(np.ones(1000, int), np.zeros(1000, int))
    rep = check_stage_one_feasible(d, files, SystemConfig())
    assert "cold_capacity" in rep.violated


def test_stage_one_dimension_mismatch():
    with pytest.raises(DimensionError):
        check_stage_one_feasible(StageOneDecision([1], [0]), make_files([1, 1]), SystemConfig())


def test_empty_stage_two_is_feasible():
    files = make_files([64, 128])
    sc = make_scenario([1, 1], [50, 50], [1, 1])
    d1 = StageOneDecision([1, 1], [1, 0])
    rep = check_stage_two_feasible(StageTwoDecision.empty(2), d1, sc, files, SystemConfig())
    assert rep.feasible
    assert np.all(rep.slacks["latency"] >= 0)


def test_access_without_storage_is_infeasible():
    files = make_files([64])
    sc = make_scenario([1], [1e6], [0.001])
    d2 = StageTwoDecision([1], [[1.0, 0.0]])
    rep = check_stage_two_feasible(d2, StageOneDecision([0], [0]), sc, files, SystemConfig())
    assert "access_implies_stored" in rep.violated


def test_stability_hand_case():
    # 8S = 100 Mb, lambda = 10/s, mu1 = 2000 Mb/s: load 1000 <= 2000
    files = make_files([12.5])
    cfg = SystemConfig(cold_rate_mbps=2000, stability_margin=1e-12)
    sc = make_scenario([1], [1e6], [10])
    rep = check_stage_two_feasible(StageTwoDecision([1], [[1.0, 0.0]]),
                                   StageOneDecision([1], [0]), sc, files, cfg)
    assert rep.feasible
    assert rep.slacks["stability"][0] == pytest.approx(2000 * (1 - 1e-12) - 1000)


def test_nan_schedule_is_structural_error():
    files = make_files([1])
    sc = make_scenario([1], [10], [1])
    with pytest.raises(DimensionError):
        check_stage_two_feasible(StageTwoDecision([1], [[np.nan, 0]]), StageOneDecision([1], [0]),
                                 sc, files, SystemConfig())


def test_hot_share_needs_replica():
    files = make_files([1])
    sc = make_scenario([1], [1e6], [0.001])
    rep = check_stage_two_feasible(StageTwoDecision([1], [[0.5, 0.5]]),
                                   StageOneDecision([1], [0]), sc, files, SystemConfig())
    assert "hot_only_if_replicated" in rep.violated


def test_profit_hand_value():
    # 16 - 64*2*0.05 + 10 = 19.6
    files = make_files([64], [16])
    cfg = SystemConfig(num_slots=1)
    sc = make_scenario([10], [100], [0.01])
    pr = profit(StageOneDecision([1], [0]), [StageTwoDecision([1], [[1, 0]])], [sc], files, cfg)
    assert pr.total == pytest.approx(19.6)
    assert pr.storage_revenue == 16
    assert pr.storage_cost == pytest.approx(6.4)


def test_nothing_accepted_is_zero_profit():
    files = make_files([64, 128], [16, 20])
    sc = make_scenario([3, 4], [50, 50], [1, 1])
    pr = profit(StageOneDecision.empty(2), [StageTwoDecision.empty(2)], [sc], files,
                SystemConfig())
    assert pr.total == 0


def test_realized_profit_sums_slot_bids():
    files = make_files([64], [16])
    cfg = SystemConfig(num_slots=3)
    s0 = make_scenario([10], [100], [0.01], p=0.5, index=0)
    s1 = make_scenario([4], [100], [0.01], p=0.5, index=1)
    d1 = StageOneDecision([1], [0])
    on = StageTwoDecision([1], [[1, 0]])
    pr = profit(d1, [on, on, StageTwoDecision.empty(1)], [s0, s1], files, cfg,
                mode="realized", slots=[0, 1, 1])
    assert pr.access_profit == 14
    with pytest.raises(DimensionError):
        profit(d1, [on], [s0, s1], files, cfg, mode="realized", slots=[0, 1])


def _random_instance(rng, n=6, k=3):
    files = make_files(rng.choice([64, 128, 256], n), rng.uniform(5, 50, n))
    p = rng.dirichlet(np.ones(k))
    scs = [make_scenario(rng.uniform(0, 10, n), rng.uniform(30, 100, n),
                         rng.uniform(0, 5, n), p[j], j) for j in range(k)]
    return files, scs


def test_rejected_files_are_inert():
    # with R, H, pi of rejected files forced to zero, feasibility and profit equal
    # those of the instance with the rejected files removed altogether
    rng = np.random.default_rng(7)
    cfg = SystemConfig(cold_capacity_mb=600, hot_capacity_mb=300)
    for _ in range(50):
        files, scs = _random_instance(rng)
        n = len(files)
        A = rng.integers(0, 2, n)
        if not A.any():
            continue
        R = rng.integers(0, 2, n) * A
        keep = np.flatnonzero(A)
        d2 = []
        for _sc in scs:
            h = rng.integers(0, 2, n) * A
            share = rng.uniform(0, 1, n) * R
            d2.append(StageTwoDecision(h, np.column_stack([h * (1 - share), h * share])))
        d1 = StageOneDecision(A, R)
        sub_files = make_files([files[i].size_mb for i in keep],
                               [files[i].storage_bid_cents for i in keep])
        sub_scs = [make_scenario(sc.access_bid_cents[keep], sc.latency_req_ms[keep],
                                 sc.arrival_rate_per_s[keep], sc.probability, sc.index)
                   for sc in scs]
        sub_d1 = StageOneDecision(A[keep], R[keep])
        sub_d2 = [StageTwoDecision(d.accept_access[keep], d.sched_prob[keep]) for d in d2]
        assert check_stage_one_feasible(d1, files, cfg).feasible == \
            check_stage_one_feasible(sub_d1, sub_files, cfg).feasible
        for a, b, sc, ssc in zip(d2, sub_d2, scs, sub_scs):
            assert check_stage_two_feasible(a, d1, sc, files, cfg).feasible == \
                check_stage_two_feasible(b, sub_d1, ssc, sub_files, cfg).feasible
        assert profit(d1, d2, scs, files, cfg).total == \
            pytest.approx(profit(sub_d1, sub_d2, sub_scs, sub_files, cfg).total, rel=1e-12)


def test_profit_linear_in_bids():
    rng = np.random.default_rng(3)
    files, scs = _random_instance(rng)
    n = len(files)
    cfg = SystemConfig()
    d1 = StageOneDecision(np.ones(n, int), rng.integers(0, 2, n))
    d2 = [StageTwoDecision(np.ones(n, int), np.column_stack([np.ones(n), np.zeros(n)]))
          for _ in scs]
    base = profit(d1, d2, scs, files, cfg)
    files2 = make_files([f.size_mb for f in files], [2 * f.storage_bid_cents for f in files])
    scs2 = [make_scenario(2 * sc.access_bid_cents, sc.latency_req_ms, sc.arrival_rate_per_s,
                          sc.probability, sc.index) for sc in scs]
    doubled = profit(d1, d2, scs2, files2, cfg)
    assert doubled.storage_revenue == pytest.approx(2 * base.storage_revenue)
    assert doubled.access_profit == pytest.approx(2 * base.access_profit)
    assert doubled.storage_cost == base.storage_cost
