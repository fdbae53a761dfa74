import numpy as np
import pytest

from tierbid.des_validator import (DesConfig, batch_means_halfwidth, check_schedule, lindley_waits,
                                   load_levels, simulate_tier)
from tierbid.errors import InstabilityError, InvalidInputError
from tierbid.latency_model import service_moments, tier_load, waiting_time


def test_lindley_matches_loop():
    rng = np.random.default_rng(0)
    a = rng.exponential(1.0, 500)
    x = rng.exponential(0.8, 500)
    w = np.zeros(500)
    for n in range(1, 500):
        w[n] = max(0.0, w[n - 1] + x[n - 1] - a[n])
    assert np.allclose(lindley_waits(a, x), w, atol=1e-12)


def test_hand_case_wait():
    # 8S = 100 Mb, lambda = 10/s, mu = 2000 Mb/s: P-K wait 0.05 s
    res = simulate_tier(DesConfig(2000.0, [10.0], [12.5], horizon_requests=1_000_000, seed=1))
    assert abs(res.mean_wait_s - 0.05) <= max(res.ci_halfwidth, 0.0025)
    assert res.latency_per_file_s[0] == pytest.approx(0.1, rel=0.05)


def test_no_traffic():
    res = simulate_tier(DesConfig(2000.0, [0.0, 0.0], [12.5, 25.0]))
    mean_wait, per_file, hw = res
    assert mean_wait == 0 and hw == 0
    assert np.all(np.isnan(per_file))
    assert res.requests_per_file.tolist() == [0, 0]


def test_two_classes_match_closed_form():
    size = np.array([12.5, 50.0])
    lam = np.array([20.0, 5.0])
    res = simulate_tier(DesConfig(8000.0, lam, size, horizon_requests=500_000, seed=3))
    w = waiting_time(tier_load(lam, size), 8000.0)
    expect = 8 * size / 8000.0 + w
    assert np.allclose(res.latency_per_file_s, expect, rtol=0.05)


def test_superposition_rate():
    lam = np.array([3.0, 7.0, 5.0])
    res = simulate_tier(DesConfig(1e4, lam, [10.0, 20.0, 5.0], horizon_requests=200_000, seed=4))
    total = lam.sum()
    # count over the window is Poisson: relative sd 1/sqrt(n)
    assert abs(res.arrival_rate_per_s - total) <= 3 * total / np.sqrt(res.num_requests)
    share = res.requests_per_file / res.num_requests
    assert np.allclose(share, lam / total, atol=3 * np.sqrt(0.25 / res.num_requests))


def test_littles_law():
    lam = np.array([10.0, 4.0])
    size = np.array([12.5, 25.0])
    res = simulate_tier(DesConfig(2000.0, lam, size, horizon_requests=400_000, seed=5))
    mean_x, _ = service_moments(tier_load(lam, size), 2000.0)
    little = res.arrival_rate_per_s * (res.mean_wait_s + mean_x)
    assert res.mean_in_system == pytest.approx(little, rel=0.02)


def test_reproducible_by_seed():
    cfg = DesConfig(2000.0, [10.0], [12.5], horizon_requests=20_000, seed=8)
    a, b = simulate_tier(cfg), simulate_tier(cfg)
    assert a.mean_wait_s == b.mean_wait_s
    c = simulate_tier(DesConfig(2000.0, [10.0], [12.5], horizon_requests=20_000, seed=9))
    assert c.mean_wait_s != a.mean_wait_s


def test_refuses_unstable_input():
    with pytest.raises(InstabilityError):
        simulate_tier(DesConfig(1000.0, [10.0], [12.5]))


@pytest.mark.parametrize("change", [dict(horizon_requests=9_999), dict(warmup_fraction=0.5),
                                    dict(warmup_fraction=-0.1), dict(rate_mbps=0.0)])
def test_config_validation(change):
    kw = dict(rate_mbps=2000.0, arrival_per_s=[1.0], size_mb=[12.5])
    kw.update(change)
    with pytest.raises(InvalidInputError):
        DesConfig(**kw)


def test_batch_means_of_constant_is_zero():
    assert batch_means_halfwidth(np.ones(1000)) == 0.0


def test_load_levels_hit_targets():
    size, mix = [12.5, 25.0], [2.0, 1.0]
    for rho, lam in zip([0.3, 0.9], load_levels([0.3, 0.9], size, mix, 2000.0)):
        assert DesConfig(2000.0, lam, size).utilization == pytest.approx(rho)


def test_split_schedule_latency():
    size = np.array([12.5, 25.0])
    lam = np.array([10.0, 6.0])
    pi = np.array([[0.5, 0.5], [1.0, 0.0]])
    chk = check_schedule(pi, lam, size, [3000.0, 4000.0], horizon_requests=300_000, seed=2)
    assert np.all(chk.wait_rel_error < 0.05)
    assert np.all(chk.latency_rel_error < 0.05)
