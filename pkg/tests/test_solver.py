import numpy as np
import pytest

from conftest import make_files, make_scenario
from tierbid.core_model import (StageOneDecision, SystemConfig, check_stage_one_feasible,
                                check_stage_two_feasible, profit, sizes_mb)
from tierbid.errors import InstanceTooLargeError, InvalidInputError
from tierbid.scenario_gen import GeneratorSpec, generate_instance
from tierbid.solver import (SolverOptions, brute_force_oracle, round_half_down, solve_pm,
                            solve_stage_one, solve_stage_two)

FAST = SolverOptions(multistarts=4)


def tight_instance(seed, rate_factor=0.5):
    """Three files, two scenarios, one slot; tier rates tied to the offered load."""
    inst = generate_instance(GeneratorSpec(num_files=3, num_scenarios=2, seed=seed,
                                           arrival_time_unit_s=1, latency_size_unit=1))
    s = sizes_mb(inst.files)
    load = max(float(np.dot(sc.arrival_rate_per_s, 8 * s)) for sc in inst.scenarios)
    cfg = SystemConfig(cold_capacity_mb=s.sum(), hot_capacity_mb=0.5 * s.sum(),
                       cold_rate_mbps=rate_factor * load, hot_rate_mbps=2 * rate_factor * load,
                       num_slots=1)
    return inst.files, inst.scenarios, cfg


# frozen oracle optima (grid 32) of tight_instance(seed)
ORACLE = {
    0: (41.88272178905261, [0, 1, 1], [0, 0, 1]),
    4: (100.52107107861093, [0, 1, 1], [0, 1, 0]),
    7: (120.20592795839616, [0, 1, 1], [0, 1, 0]),
    18: (34.1304445094239, [1, 0, 1], [1, 0, 1]),
}


@pytest.mark.parametrize("seed", sorted(ORACLE))
def test_oracle_frozen_values(seed):
    files, scs, cfg = tight_instance(seed)
    res = brute_force_oracle(files, scs, cfg, 32)
    value, accept, hot = ORACLE[seed]
    assert res.profit == pytest.approx(value, rel=1e-12)
    assert res.stage_one.accept.tolist() == accept
    assert res.stage_one.hot_replica.tolist() == hot


@pytest.mark.parametrize("seed", sorted(ORACLE))
def test_pm_reaches_frozen_oracle(seed):
    files, scs, cfg = tight_instance(seed)
    d1, plan, rep = solve_pm(files, scs, cfg, SolverOptions(multistarts=16))
    assert rep.objective >= 0.95 * ORACLE[seed][0]
    assert profit(d1, plan, scs, files, cfg).total == pytest.approx(rep.objective)


def test_round_half_down():
    assert round_half_down([0.0, 0.49, 0.5, 0.51, 1.0]).tolist() == [0, 0, 0, 1, 1]


def test_single_profitable_file_is_fully_accepted():
    files = make_files([64], [19])
    sc = make_scenario([1000.0], [1e6], [0.01])
    cfg = SystemConfig(num_slots=1)
    d1, plan, _ = solve_stage_one(files, [sc], cfg, FAST)
    orc = brute_force_oracle(files, [sc], cfg, 8)
    assert d1.accept.tolist() == [1] and plan[0].accept_access.tolist() == [1]
    assert d1 == orc.stage_one
    # a replica only pays when hot storage is the cheaper tier
    cheap_hot = cfg.with_(hot_cost_cents_per_mb=0.01)
    d1, plan, _ = solve_stage_one(files, [sc], cheap_hot, FAST)
    assert d1.accept.tolist() == [1] and d1.hot_replica.tolist() == [1]
    assert plan[0].accept_access.tolist() == [1]
    assert d1 == brute_force_oracle(files, [sc], cheap_hot, 8).stage_one


def test_money_losing_file_is_rejected():
    files = make_files([64], [5.0])           # 2 * 64 * 0.05 = 6.4 > 5
    sc = make_scenario([0.0], [100], [1.0])
    d1, _, rep = solve_stage_one(files, [sc], SystemConfig(), FAST)
    assert d1.accept.tolist() == [0]
    assert rep.objective == 0


def test_rounding_respects_original_capacity():
    # capacity equal to the demand of a fractional optimum
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = 6
        files = make_files(rng.choice([64, 128, 256], n), rng.uniform(20, 80, n))
        sc = make_scenario(rng.uniform(0, 5, n), rng.uniform(40, 200, n), rng.uniform(0, 2, n))
        total = sizes_mb(files).sum()
        cfg = SystemConfig(cold_capacity_mb=1.3 * total, hot_capacity_mb=0.2 * total,
                           num_slots=1)
        d1, plan, _ = solve_stage_one(files, [sc], cfg, FAST)
        assert check_stage_one_feasible(d1, files, cfg).feasible
        assert check_stage_two_feasible(plan[0], d1, sc, files, cfg).feasible


def test_stage_two_nothing_stored():
    files = make_files([64, 128])
    sc = make_scenario([5, 5], [100, 100], [1, 1])
    d2, rep = solve_stage_two(StageOneDecision.empty(2), sc, files, SystemConfig(), FAST)
    assert d2.accept_access.sum() == 0 and np.all(d2.sched_prob == 0)
    assert rep.objective == 0


def test_stage_two_single_replicated_file():
    files = make_files([64])
    sc = make_scenario([7.5], [1e6], [1e-6])
    d2, rep = solve_stage_two(StageOneDecision([1], [1]), sc, files, SystemConfig(), FAST)
    assert d2.accept_access.tolist() == [1]
    assert d2.sched_prob.sum() == pytest.approx(1.0)
    assert rep.objective == pytest.approx(7.5)


def test_stage_two_joint_overload_keeps_higher_bid():
    # each file alone loads the cold tier to 60%, together 120%
    files = make_files([12.5, 12.5])
    cfg = SystemConfig(cold_rate_mbps=1000.0)
    sc = make_scenario([9.0, 4.0], [1e6, 1e6], [6.0, 6.0])
    d2, _ = solve_stage_two(StageOneDecision([1, 1], [0, 0]), sc, files, cfg, FAST)
    assert d2.accept_access.tolist() == [1, 0]
    # without room for a replica the oracle faces the same cold-only choice
    orc = brute_force_oracle(files, [sc], cfg.with_(num_slots=1, hot_capacity_mb=1.0), 8)
    assert orc.stage_two[0].accept_access.tolist() == [1, 0]


def test_stage_two_feasible_on_original_constraints():
    inst = generate_instance(GeneratorSpec(num_files=15, num_scenarios=2, seed=3,
                                           arrival_time_unit_s=1, latency_size_unit=1))
    s = sizes_mb(inst.files)
    cfg = SystemConfig(cold_capacity_mb=s.sum(), hot_capacity_mb=0.4 * s.sum(),
                       cold_rate_mbps=3e4, hot_rate_mbps=6e4)
    d1, _, _ = solve_stage_one(inst.files, inst.scenarios, cfg, FAST, storage_only=True)
    for sc in inst.scenarios:
        d2, rep = solve_stage_two(d1, sc, inst.files, cfg, FAST)
        assert check_stage_two_feasible(d2, d1, sc, inst.files, cfg).feasible
        assert rep.objective == pytest.approx(float(np.dot(sc.access_bid_cents,
                                                           d2.accept_access)))


def test_same_seed_same_result():
    files, scs, cfg = tight_instance(2)
    a = solve_stage_one(files, scs, cfg, FAST)
    b = solve_stage_one(files, scs, cfg, FAST)
    assert a[0] == b[0]
    assert a[2].objective == b[2].objective
    assert all(x == y for x, y in zip(a[1], b[1]))


def test_continuation_increases_integrality():
    for seed in range(5):
        files, scs, cfg = tight_instance(seed)
        _, _, rep = solve_stage_one(files, scs, cfg, SolverOptions(multistarts=1, polish=False))
        integ = np.array(rep.integrality)
        assert len(integ) >= 2
        assert np.all(np.diff(integ) >= -1e-12)
        assert integ[-1] == pytest.approx(1.0)


def test_report_fields():
    files, scs, cfg = tight_instance(1)
    _, _, rep = solve_stage_one(files, scs, cfg, FAST)
    assert rep.starts == 4
    assert rep.wall_time > 0 and rep.iterations > 0
    assert "cold_capacity" in rep.slacks and "latency[0]" in rep.slacks


def test_oracle_empty_and_guards():
    cfg = SystemConfig()
    assert brute_force_oracle([], [make_scenario([], [], [])], cfg).profit == 0
    files = make_files([64] * 5)
    sc = make_scenario([1] * 5, [50] * 5, [1] * 5)
    with pytest.raises(InstanceTooLargeError):
        brute_force_oracle(files, [sc], cfg)
    with pytest.raises(InvalidInputError):
        brute_force_oracle(files[:2], [make_scenario([1, 1], [50, 50], [1, 1])], cfg, 0)


def test_oracle_grid_refinement_is_stable():
    for seed in range(6):
        files, scs, cfg = tight_instance(seed)
        coarse = brute_force_oracle(files, scs, cfg, 8).profit
        fine = brute_force_oracle(files, scs, cfg, 32).profit
        assert fine >= coarse - 1e-9
        assert fine - coarse <= 0.01 * fine


def test_options_validation():
    with pytest.raises(InvalidInputError):
        SolverOptions(multistarts=0)
    with pytest.raises(InvalidInputError):
        SolverOptions(alpha_schedule=(10.0, 5.0, 100.0))
