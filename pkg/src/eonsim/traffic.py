"""Dynamic request stream: Poisson arrivals, exponential holding, uniform node pairs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from eonsim.net_model import Topology

DEFAULT_BANDWIDTHS: tuple[tuple[float, float], ...] = (
    (25.0, 1.0),
    (50.0, 1.0),
    (100.0, 1.0),
    (200.0, 1.0),
    (400.0, 1.0),
)


@dataclass(frozen=True)
class Request:
    id: int
    src: str
    dst: str
    bandwidth_gbps: float
    arrival_time: float
    holding_time: float

    @property
    def departure_time(self) -> float:
        return self.arrival_time + self.holding_time


@dataclass(frozen=True)
class TrafficConfig:
    arrival_rate: float
    mean_holding: float = 1.0
    num_requests: int = 10_000
    bandwidth_choices: tuple[tuple[float, float], ...] = field(default=DEFAULT_BANDWIDTHS)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.arrival_rate < 0:
            raise ValueError("arrival_rate must be >= 0")
        if not self.mean_holding > 0:
            raise ValueError("mean_holding must be > 0")
        if self.num_requests < 0:
            raise ValueError("num_requests must be >= 0")
        if not self.bandwidth_choices:
            raise ValueError("bandwidth_choices must be nonempty")
        for bw, w in self.bandwidth_choices:
            if not bw > 0 or not w > 0:
                raise ValueError("bandwidths and weights must be positive")

    @property
    def offered_load_erlang(self) -> float:
        return self.arrival_rate * self.mean_holding


def erlang_per_core(config: TrafficConfig, cores: int) -> float:
    """Total offered Erlang divided evenly over the fiber cores."""
    if cores < 1:
        raise ValueError("cores must be >= 1")
    return config.arrival_rate * config.mean_holding / cores


def derive_seed(*keys: int) -> int:
    """Hash integer keys (master seed, run index, ...) into an independent 63-bit seed."""
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


def generate_requests(topology: Topology, config: TrafficConfig) -> list[Request]:
    """Draw the full request stream for one run.

    Each quantity is drawn as one vector from its own generator, so two
    configs differing only in load share the same underlying uniforms
    (common random numbers across the load axis).
    """
    nodes = topology.nodes
    n_nodes = len(nodes)
    if n_nodes < 2:
        raise ValueError("traffic generation needs at least 2 nodes")
    n = config.num_requests
    if n == 0:
        return []
    if config.arrival_rate <= 0:
        raise ValueError("arrival_rate must be > 0 to generate requests")
    gap_rng, hold_rng, pair_rng, bw_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(4)
    )
    gaps = gap_rng.exponential(1.0 / config.arrival_rate, n)
    holds = hold_rng.exponential(config.mean_holding, n)
    arrivals = np.cumsum(gaps)
    for i in range(1, n):
        if arrivals[i] <= arrivals[i - 1]:
            arrivals[i] = np.nextafter(arrivals[i - 1], np.inf)
    holds = np.where(holds > 0, holds, np.finfo(float).tiny)

    pair_idx = pair_rng.integers(0, n_nodes * (n_nodes - 1), n)
    src_idx = pair_idx // (n_nodes - 1)
    dst_idx = pair_idx % (n_nodes - 1)
    dst_idx = dst_idx + (dst_idx >= src_idx)

    values = np.array([bw for bw, _ in config.bandwidth_choices], dtype=float)
    weights = np.array([w for _, w in config.bandwidth_choices], dtype=float)
    bws = values[bw_rng.choice(len(values), size=n, p=weights / weights.sum())]

    return [
        Request(i, nodes[src_idx[i]], nodes[dst_idx[i]], float(bws[i]), float(arrivals[i]), float(holds[i]))
        for i in range(n)
    ]
