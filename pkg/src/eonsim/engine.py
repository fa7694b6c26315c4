"""Discrete-event loop: arrivals and departures in time order, statistics per run."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from eonsim.crosstalk import CrosstalkParams, core_layout
from eonsim.learning import AgentConfig, PathAgent, make_agent
from eonsim.net_model import Topology
from eonsim.routing import RouteKind, RoutePolicy, UnroutableError, k_shortest_paths, xt_aware_route
from eonsim.slicing import (
    BLOCK_REASONS,
    NO_ROUTE,
    AssignmentSettings,
    LightSegment,
    ProvisionResult,
    SliceConfig,
    provision_with_slicing,
)
from eonsim.spectrum import DEFAULT_MODULATIONS, FitPolicy, Modulation, SpectrumError, SpectrumGrid, core_order_for
from eonsim.traffic import Request, TrafficConfig, derive_seed, generate_requests

logger = logging.getLogger(__name__)

AGENT_STREAM = 0xA6E7


class EventKind(IntEnum):
    # value order is the tie-break order: departures free capacity first
    DEPARTURE = 0
    ARRIVAL = 1


@dataclass(frozen=True, order=True)
class Event:
    time: float
    kind: EventKind
    request_id: int


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation run needs besides the topology."""

    traffic: TrafficConfig
    route: RoutePolicy = field(default_factory=RoutePolicy)
    allocation: FitPolicy = FitPolicy.FIRST_FIT
    core_order: str = "index"
    slot_width_ghz: float = 12.5
    guard_slots: int = 0
    modulations: tuple[Modulation, ...] = DEFAULT_MODULATIONS
    xt: CrosstalkParams = field(default_factory=CrosstalkParams)
    slicing: SliceConfig = field(default_factory=SliceConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    warmup_requests: int = 0


@dataclass
class RunStats:
    total_requests: int = 0
    blocked: int = 0
    blocked_by_reason: dict[str, int] = field(default_factory=lambda: dict.fromkeys(BLOCK_REASONS, 0))
    segments_used: int = 0
    empty: bool = False

    def record(self, result: ProvisionResult) -> None:
        self.total_requests += 1
        if result.blocked:
            self.blocked += 1
            self.blocked_by_reason[result.reason] += 1
        else:
            self.segments_used += len(result.segments)

    @property
    def blocking(self) -> float:
        return blocking_probability(self)


def blocking_probability(stats: RunStats) -> float:
    return stats.blocked / stats.total_requests if stats.total_requests else 0.0


def mean_blocking(stats: list[RunStats]) -> float:
    """Unweighted mean of per-run blocking probabilities (runs share a request count)."""
    if not stats:
        return 0.0
    return sum(blocking_probability(s) for s in stats) / len(stats)


class Simulator:
    """Holds per-topology caches shared by all runs/episodes of one configuration."""

    def __init__(self, config: RunConfig, topology: Topology):
        self.config = config
        self.topology = topology
        self.layout = core_layout(topology.cores)
        self.settings = AssignmentSettings(
            policy=FitPolicy(config.allocation),
            core_order=tuple(core_order_for(self.layout, config.core_order)),
            slot_width_ghz=config.slot_width_ghz,
            guard_slots=config.guard_slots,
            modulations=config.modulations,
            xt_params=config.xt,
            layout=self.layout,
        )
        self._paths: dict[tuple[str, str], list] = {}

    def candidates(self, src: str, dst: str) -> list:
        key = (src, dst)
        paths = self._paths.get(key)
        if paths is None:
            route = self.config.route
            try:
                paths = k_shortest_paths(self.topology, src, dst, route.num_candidates, route.weight)
            except UnroutableError:
                paths = []
            self._paths[key] = paths
        return paths

    def run(self, requests: list[Request], agent: PathAgent | None = None, audit_every: int = 0) -> RunStats:
        cfg = self.config
        grid = SpectrumGrid.for_topology(self.topology)
        stats = RunStats()
        events = [Event(r.arrival_time, EventKind.ARRIVAL, r.id) for r in requests]
        heapq.heapify(events)
        by_id = {r.id: r for r in requests}
        position = {r.id: i for i, r in enumerate(requests)}
        active: dict[int, list[LightSegment]] = {}
        lightpath_ids = itertools.count(1)
        next_id = lightpath_ids.__next__
        processed = 0

        while events:
            ev = heapq.heappop(events)
            if ev.kind is EventKind.DEPARTURE:
                for seg in active.pop(ev.request_id):
                    grid.release(seg.lightpath_id)
            else:
                req = by_id[ev.request_id]
                result = self._serve(req, grid, agent, next_id, requests, position[req.id])
                if not result.blocked:
                    active[req.id] = result.segments
                    heapq.heappush(events, Event(req.departure_time, EventKind.DEPARTURE, req.id))
                if position[req.id] >= cfg.warmup_requests:
                    stats.record(result)
            processed += 1
            if audit_every and processed % audit_every == 0:
                grid.audit()

        grid.audit()
        if not grid.is_empty():
            raise SpectrumError("grid not empty after the final departure")
        if stats.total_requests == 0:
            stats.empty = True
            logger.warning("run processed no requests; blocking reported as 0")
        return stats

    def _serve(self, req, grid, agent, next_id, requests, pos) -> ProvisionResult:
        cfg = self.config
        paths = self.candidates(req.src, req.dst)
        if not paths:
            result = ProvisionResult([], NO_ROUTE)
        else:
            if cfg.route.kind is RouteKind.XT_AWARE:
                paths = xt_aware_route(
                    self.topology, req.src, req.dst, cfg.route.k, cfg.route.alpha,
                    grid, cfg.xt, self.layout, cfg.route.weight, candidates=paths,
                )
            action = None
            if agent is not None:
                state = (req.src, req.dst)
                action = agent.select(state, len(paths), req)
                paths = [paths[action]]
            result = provision_with_slicing(req, paths, grid, cfg.slicing, self.settings, next_id)
            if agent is not None:
                nxt = requests[pos + 1] if pos + 1 < len(requests) else None
                next_state = (nxt.src, nxt.dst) if nxt is not None else None
                agent.feedback(state, action, not result.blocked, next_state, req)
        return result


def build_agent(config: RunConfig) -> PathAgent | None:
    rng = np.random.default_rng(derive_seed(config.traffic.seed, AGENT_STREAM))
    return make_agent(config.agent, config.route.num_candidates, rng)


def run(config: RunConfig, topology: Topology, agent: PathAgent | None = None) -> RunStats:
    """Simulate one request stream. Deterministic given ``config`` (seed included)."""
    requests = generate_requests(topology, config.traffic)
    return Simulator(config, topology).run(requests, agent)


def episode_traffic(config: RunConfig, episode: int) -> TrafficConfig:
    seed = config.traffic.seed if episode == 0 else derive_seed(config.traffic.seed, episode)
    return replace(config.traffic, seed=seed)


def run_episodes(config: RunConfig, topology: Topology, agent: PathAgent | None = None) -> list[RunStats]:
    """Run ``config.agent.episodes`` fresh request streams; the agent's tables persist between them."""
    episodes = config.agent.episodes
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    sim = Simulator(config, topology)
    series = []
    for ep in range(episodes):
        requests = generate_requests(topology, episode_traffic(config, ep))
        series.append(sim.run(requests, agent))
        if agent is not None:
            agent.end_episode()
    return series


def standard_error(values) -> float:
    values = np.asarray(list(values), dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))
