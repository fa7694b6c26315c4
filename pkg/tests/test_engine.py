import numpy as np
import pytest

from conftest import make_topology
from eonsim.engine import (
    Event,
    EventKind,
    RunConfig,
    RunStats,
    Simulator,
    build_agent,
    mean_blocking,
    run,
    run_episodes,
    standard_error,
)
from eonsim.learning import AgentConfig
from eonsim.routing import RoutePolicy
from eonsim.slicing import SliceConfig
from eonsim.traffic import Request, TrafficConfig


def _cfg(rate=5.0, n=300, seed=1, **kw):
    return RunConfig(TrafficConfig(arrival_rate=rate, num_requests=n, seed=seed), **kw)


@pytest.fixture
def single_link():
    # 100 Gb/s over 100 km needs 2 slots at 16QAM; two slots fit exactly one request
    return make_topology([("A", "B", 100)], cores=1, slots=2)


def _req(i, t, hold):
    return Request(i, "A", "B", 100.0, t, hold)


def test_event_order_departure_first_on_ties():
    evs = sorted([Event(1.0, EventKind.ARRIVAL, 0), Event(1.0, EventKind.DEPARTURE, 5), Event(0.5, EventKind.ARRIVAL, 9)])
    assert [e.request_id for e in evs] == [9, 5, 0]


def test_zero_requests_flags_empty(triangle):
    stats = run(_cfg(n=0), triangle)
    assert stats.empty and stats.total_requests == 0 and stats.blocking == 0.0


def test_overlap_blocks_second(single_link):
    sim = Simulator(_cfg(), single_link)
    stats = sim.run([_req(0, 0.0, 2.0), _req(1, 1.0, 2.0)])
    assert stats.blocked == 1
    assert stats.blocked_by_reason["no_spectrum"] == 1


def test_disjoint_holding_no_blocking(single_link):
    sim = Simulator(_cfg(), single_link)
    stats = sim.run([_req(0, 0.0, 1.0), _req(1, 1.5, 1.0), _req(2, 3.0, 1.0)])
    assert stats.blocked == 0 and stats.total_requests == 3


def test_departure_at_arrival_time_frees_first(single_link):
    sim = Simulator(_cfg(), single_link)
    stats = sim.run([_req(0, 0.0, 1.0), _req(1, 1.0, 1.0)])
    assert stats.blocked == 0


def test_unreachable_is_no_route():
    topo = make_topology([("A", "B", 9000)], cores=1, slots=16)
    stats = Simulator(_cfg(), topo).run([_req(0, 0.0, 1.0)])
    assert stats.blocked_by_reason["no_route"] == 1


def test_run_deterministic(triangle):
    a = run(_cfg(rate=40, seed=3), triangle)
    b = run(_cfg(rate=40, seed=3), triangle)
    assert a == b


def test_audit_during_run(triangle):
    from eonsim.traffic import generate_requests

    cfg = _cfg(rate=200, n=400, slicing=SliceConfig(max_segments=4))
    topo = make_topology([("A", "B", 1), ("B", "C", 1), ("A", "C", 3)], cores=4, slots=24)
    stats = Simulator(cfg, topo).run(generate_requests(topo, cfg.traffic), audit_every=7)
    assert stats.total_requests == 400 and stats.blocked > 0


def test_warmup_excluded(triangle):
    cfg = _cfg(n=100, warmup_requests=30)
    assert run(cfg, triangle).total_requests == 70


def test_blocking_aggregation():
    s1 = RunStats(total_requests=10, blocked=1)
    s2 = RunStats(total_requests=10, blocked=3)
    assert mean_blocking([s1, s2]) == pytest.approx(0.2)
    assert mean_blocking([]) == 0.0
    assert standard_error([0.1, 0.3]) == pytest.approx(0.1)
    assert standard_error([0.5]) == 0.0


def test_single_episode_equals_run(triangle):
    cfg = _cfg(rate=30, route=RoutePolicy("ksp", 2), agent=AgentConfig("q_learning", episodes=1))
    series = run_episodes(cfg, triangle, build_agent(cfg))
    assert len(series) == 1
    assert series[0] == run(cfg, triangle, build_agent(cfg))


def test_no_agent_series_without_learning(triangle):
    cfg = _cfg(rate=30, n=100, route=RoutePolicy("ksp", 2), agent=AgentConfig("none", episodes=4))
    assert build_agent(cfg) is None
    series = run_episodes(cfg, triangle)
    assert len(series) == 4
    assert series[0] == run(cfg, triangle)


def _toy():
    # A-B direct is out of reach for every modulation; A-C-B is short
    return make_topology([("A", "B", 5000), ("A", "C", 100), ("C", "B", 100)], cores=1, slots=320)


def test_q_learning_learns_free_path():
    topo = _toy()
    cfg = _cfg(
        rate=2.0, n=50, seed=4,
        route=RoutePolicy("ksp", 2, weight="hops"),
        agent=AgentConfig("q_learning", episodes=30, epsilon=0.0),
    )
    agent = build_agent(cfg)
    series = [s.blocking for s in run_episodes(cfg, topo, agent)]
    assert np.mean(series[-10:]) < np.mean(series[:10])
    assert series[-10:] == [0.0] * 10
    # hop-first ordering puts the dead direct link at index 0 for A-B
    for state in [("A", "B"), ("B", "A")]:
        q = agent.table.row(state)
        assert int(np.argmax(q)) == 1
    for state in [("A", "C"), ("C", "B")]:
        assert int(np.argmax(agent.table.row(state))) == 0


@pytest.mark.parametrize("kind", ["egreedy", "ucb", "tree"])
def test_other_agents_run(kind):
    topo = _toy()
    cfg = _cfg(rate=2.0, n=150, seed=2, route=RoutePolicy("ksp", 2, weight="hops"), agent=AgentConfig(kind, episodes=8))
    series = [s.blocking for s in run_episodes(cfg, topo, build_agent(cfg))]
    assert len(series) == 8
    assert series[-1] <= series[0]
