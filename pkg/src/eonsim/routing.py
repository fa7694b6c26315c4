"""Candidate path computation: shortest path, Yen's k-shortest paths, XT-aware ranking."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

from eonsim.net_model import Link, Topology, neighbors

if TYPE_CHECKING:
    from eonsim.crosstalk import CoreLayout, CrosstalkParams
    from eonsim.spectrum import SpectrumGrid


class UnroutableError(LookupError):
    """No loopless path joins the requested node pair."""


class RouteKind(str, Enum):
    SP = "sp"
    KSP = "ksp"
    XT_AWARE = "xt_aware"


WEIGHTS = ("km", "hops")


@dataclass(frozen=True)
class RoutePolicy:
    kind: RouteKind = RouteKind.KSP
    k: int = 3
    alpha: float = 0.0
    weight: str = "km"

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RouteKind(self.kind))
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.weight not in WEIGHTS:
            raise ValueError(f"weight must be one of {WEIGHTS}")

    @property
    def num_candidates(self) -> int:
        return 1 if self.kind is RouteKind.SP else self.k


@dataclass(frozen=True)
class Path:
    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    link_ids: tuple[int, ...]

    @property
    def length_km(self) -> float:
        return sum(link.length_km for link in self.links)

    @property
    def hops(self) -> int:
        return len(self.links)

    def weight(self, weight: str = "km") -> float:
        return float(self.hops) if weight == "hops" else self.length_km


def make_path(topology: Topology, nodes: tuple[str, ...] | list[str]) -> Path:
    nodes = tuple(nodes)
    if len(set(nodes)) != len(nodes):
        raise ValueError(f"path {nodes} repeats a node")
    ids = tuple(topology.link_id(u, v) for u, v in zip(nodes, nodes[1:]))
    return Path(nodes, tuple(topology.links[i] for i in ids), ids)


def _edge_weight(link: Link, weight: str) -> float:
    return 1.0 if weight == "hops" else link.length_km


def _path_cost(topology: Topology, nodes: tuple[str, ...], weight: str) -> float:
    cost = 0.0
    for u, v in zip(nodes, nodes[1:]):
        cost += _edge_weight(topology.link_between(u, v), weight)
    return cost


def _dijkstra(
    topology: Topology,
    src: str,
    dst: str,
    weight: str,
    banned_nodes: frozenset | set = frozenset(),
    banned_edges: frozenset | set = frozenset(),
) -> tuple[str, ...] | None:
    # Keys are (cost, node sequence): ties resolve to the lexicographically
    # smallest sequence, and the ordering is preserved under extension.
    heap: list[tuple[float, tuple[str, ...]]] = [(0.0, (src,))]
    settled: set[str] = set()
    while heap:
        cost, seq = heapq.heappop(heap)
        u = seq[-1]
        if u in settled:
            continue
        settled.add(u)
        if u == dst:
            return seq
        for v, link in neighbors(topology, u):
            if v in settled or v in banned_nodes or (u, v) in banned_edges:
                continue
            heapq.heappush(heap, (cost + _edge_weight(link, weight), seq + (v,)))
    return None


def shortest_path(topology: Topology, src: str, dst: str, weight: str = "km") -> Path:
    """Minimum-weight loopless path; ties go to the lexicographically smallest node sequence.

    Raises:
        UnroutableError: if ``dst`` is not reachable from ``src``.
    """
    _check_pair(topology, src, dst)
    seq = _dijkstra(topology, src, dst, weight)
    if seq is None:
        raise UnroutableError(f"no path from {src!r} to {dst!r}")
    return make_path(topology, seq)


def _check_pair(topology: Topology, src: str, dst: str) -> None:
    for node in (src, dst):
        neighbors(topology, node)
    if src == dst:
        raise ValueError("src and dst must differ")


def k_shortest_paths(topology: Topology, src: str, dst: str, k: int, weight: str = "km") -> list[Path]:
    """Yen's algorithm: the ``k`` lightest loopless paths in ascending (weight, node sequence) order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_pair(topology, src, dst)
    first = _dijkstra(topology, src, dst, weight)
    if first is None:
        raise UnroutableError(f"no path from {src!r} to {dst!r}")
    accepted: list[tuple[str, ...]] = [first]
    seen: set[tuple[str, ...]] = {first}
    candidates: list[tuple[float, tuple[str, ...]]] = []
    while len(accepted) < k:
        last = accepted[-1]
        for i in range(len(last) - 1):
            root = last[: i + 1]
            spur = last[i]
            banned_edges = set()
            for p in accepted:
                if p[: i + 1] == root and len(p) > i + 1:
                    banned_edges.add((p[i], p[i + 1]))
                    banned_edges.add((p[i + 1], p[i]))
            banned_nodes = set(root[:-1])
            tail = _dijkstra(topology, spur, dst, weight, banned_nodes, banned_edges)
            if tail is None:
                continue
            full = root[:-1] + tail
            if full not in seen:
                seen.add(full)
                heapq.heappush(candidates, (_path_cost(topology, full, weight), full))
        if not candidates:
            break
        _, best = heapq.heappop(candidates)
        accepted.append(best)
    return [make_path(topology, p) for p in accepted]


def xt_aware_route(
    topology: Topology,
    src: str,
    dst: str,
    k: int,
    alpha: float,
    grid: SpectrumGrid,
    params: CrosstalkParams,
    layout: CoreLayout,
    weight: str = "km",
    candidates: list[Path] | None = None,
) -> list[Path]:
    """Rank the k shortest candidates by ``alpha*length + (1-alpha)*crosstalk load``.

    Both terms are normalized by their maximum over the candidates. Ties fall
    back to length, then node sequence.
    """
    from eonsim.crosstalk import aggregate_path_xt_load

    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if candidates is None:
        candidates = k_shortest_paths(topology, src, dst, k, weight)
    lengths = [p.length_km for p in candidates]
    max_len = max(lengths)
    if alpha < 1.0:
        loads = [aggregate_path_xt_load(grid, params, layout, p) for p in candidates]
    else:
        loads = [0.0] * len(candidates)
    max_load = max(loads)

    def score(i: int) -> tuple[float, float, tuple[str, ...]]:
        norm_len = lengths[i] / max_len if max_len > 0 else 0.0
        norm_xt = loads[i] / max_load if max_load > 0 else 0.0
        return (alpha * norm_len + (1.0 - alpha) * norm_xt, lengths[i], candidates[i].nodes)

    return [candidates[i] for i in sorted(range(len(candidates)), key=score)]
