import math

import numpy as np
import pytest
from scipy import stats

from eonsim.net_model import load_topology, sample_topology_path
from eonsim.traffic import TrafficConfig, derive_seed, erlang_per_core, generate_requests

from conftest import make_topology


@pytest.fixture(scope="module")
def nsf():
    return load_topology(sample_topology_path("nsf14"))


def test_zero_requests(nsf):
    assert generate_requests(nsf, TrafficConfig(arrival_rate=1.0, num_requests=0)) == []


def test_same_seed_identical(nsf):
    cfg = TrafficConfig(arrival_rate=3.0, mean_holding=2.0, num_requests=500, seed=11)
    assert generate_requests(nsf, cfg) == generate_requests(nsf, cfg)
    other = generate_requests(nsf, TrafficConfig(arrival_rate=3.0, mean_holding=2.0, num_requests=500, seed=12))
    assert other != generate_requests(nsf, cfg)


def test_offered_load_750():
    cfg = TrafficConfig(arrival_rate=7.5, mean_holding=100.0)
    assert cfg.offered_load_erlang == pytest.approx(750.0)


def test_interarrival_and_holding_means(nsf):
    reqs = generate_requests(nsf, TrafficConfig(arrival_rate=10.0, mean_holding=75.0, num_requests=100_000, seed=3))
    arrivals = np.array([r.arrival_time for r in reqs])
    gaps = np.diff(np.concatenate(([0.0], arrivals)))
    assert abs(gaps.mean() - 0.1) / 0.1 < 0.01
    holds = np.array([r.holding_time for r in reqs])
    assert abs(holds.mean() - 75.0) / 75.0 < 0.01


def test_stream_invariants(nsf):
    reqs = generate_requests(nsf, TrafficConfig(arrival_rate=50.0, num_requests=5000, seed=5))
    assert [r.id for r in reqs] == list(range(5000))
    assert all(r.src != r.dst for r in reqs)
    assert all(b.arrival_time > a.arrival_time for a, b in zip(reqs, reqs[1:]))
    assert all(r.holding_time > 0 for r in reqs)
    assert {r.bandwidth_gbps for r in reqs} == {25.0, 50.0, 100.0, 200.0, 400.0}


def test_pairs_uniform_chi_square():
    topo = make_topology([("A", "B", 1), ("B", "C", 1), ("C", "D", 1), ("D", "E", 1)])
    reqs = generate_requests(topo, TrafficConfig(arrival_rate=1.0, num_requests=1_000_000, seed=9))
    counts = {}
    for r in reqs:
        counts[(r.src, r.dst)] = counts.get((r.src, r.dst), 0) + 1
    assert len(counts) == 20
    _, p = stats.chisquare(list(counts.values()))
    assert p > 0.01


def test_weighted_bandwidths():
    topo = make_topology([("A", "B", 1)])
    cfg = TrafficConfig(arrival_rate=1.0, num_requests=20_000, bandwidth_choices=((10.0, 3.0), (40.0, 1.0)), seed=2)
    bws = np.array([r.bandwidth_gbps for r in generate_requests(topo, cfg)])
    assert abs((bws == 10.0).mean() - 0.75) < 0.015


def test_needs_two_nodes():
    topo = make_topology([], nodes=["A"])
    with pytest.raises(ValueError):
        generate_requests(topo, TrafficConfig(arrival_rate=1.0, num_requests=1))


def test_load_scaling_shares_randomness(nsf):
    lo = generate_requests(nsf, TrafficConfig(arrival_rate=1.0, num_requests=50, seed=4))
    hi = generate_requests(nsf, TrafficConfig(arrival_rate=2.0, num_requests=50, seed=4))
    assert [(r.src, r.dst, r.bandwidth_gbps) for r in lo] == [(r.src, r.dst, r.bandwidth_gbps) for r in hi]
    assert all(math.isclose(a.arrival_time, 2 * b.arrival_time) for a, b in zip(lo, hi))


@pytest.mark.parametrize("rate, hold, cores, expected", [(100.0, 4.0, 4, 100.0), (7.0, 3.0, 1, 21.0), (0.0, 5.0, 7, 0.0)])
def test_erlang_per_core(rate, hold, cores, expected):
    assert erlang_per_core(TrafficConfig(arrival_rate=rate, mean_holding=hold), cores) == pytest.approx(expected)


def test_derive_seed_distinct():
    seeds = {derive_seed(0, i) for i in range(100)}
    assert len(seeds) == 100
    assert derive_seed(5, 3) == derive_seed(5, 3)
