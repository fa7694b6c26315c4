"""Network topologies: nodes, fiber links, and the topology file format.

A topology file is JSON::

    {"name": "toy", "nodes": ["A", "B"],
     "links": [{"src": "A", "dst": "B", "length_km": 100}]}

Core count and slots per core are not part of the file; they come from the
run configuration and are stamped onto every link at load time.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path as FsPath

logger = logging.getLogger(__name__)

SUPPORTED_CORES = (1, 4, 7)


class TopologyError(ValueError):
    """Raised for malformed or inconsistent topology files."""


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    length_km: float
    cores: int = 1
    slots_per_core: int = 320

    def __post_init__(self) -> None:
        if not self.length_km > 0:
            raise TopologyError(f"link {self.src}-{self.dst}: length_km must be > 0, got {self.length_km}")
        if self.cores not in SUPPORTED_CORES:
            raise TopologyError(f"link {self.src}-{self.dst}: cores must be one of {SUPPORTED_CORES}")
        if self.slots_per_core < 1:
            raise TopologyError(f"link {self.src}-{self.dst}: slots_per_core must be >= 1")

    def other(self, node: str) -> str:
        return self.dst if node == self.src else self.src


@dataclass(frozen=True)
class Topology:
    """Undirected fiber graph. Immutable once built.

    Each physical link is stored once; both traversal directions share it
    (and therefore share its spectrum).
    """

    name: str
    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    _adj: dict = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(set(self.nodes)) != len(self.nodes):
            dup = sorted({n for n in self.nodes if self.nodes.count(n) > 1})
            raise TopologyError(f"duplicate node ids: {dup}")
        declared = set(self.nodes)
        adj: dict[str, list[tuple[str, Link]]] = {n: [] for n in self.nodes}
        index: dict[frozenset, int] = {}
        for i, link in enumerate(self.links):
            for end in (link.src, link.dst):
                if end not in declared:
                    raise TopologyError(f"link {link.src}-{link.dst} references undeclared node {end!r}")
            if link.src == link.dst:
                raise TopologyError(f"self-loop on node {link.src!r}")
            key = frozenset((link.src, link.dst))
            if key in index:
                raise TopologyError(f"duplicate link {link.src}-{link.dst}")
            index[key] = i
            adj[link.src].append((link.dst, link))
            adj[link.dst].append((link.src, link))
        for n in adj:
            adj[n].sort(key=lambda item: item[0])
        object.__setattr__(self, "_adj", adj)
        object.__setattr__(self, "_index", index)
        if self.nodes and not self.is_connected():
            logger.warning("topology %r is not connected", self.name)

    def link_id(self, u: str, v: str) -> int:
        """Index of the link joining ``u`` and ``v`` (either direction)."""
        try:
            return self._index[frozenset((u, v))]
        except KeyError:
            raise KeyError(f"no link between {u!r} and {v!r}") from None

    def link_between(self, u: str, v: str) -> Link:
        return self.links[self.link_id(u, v)]

    def degree(self, node: str) -> int:
        return len(neighbors(self, node))

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        seen = {self.nodes[0]}
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for v, _ in self._adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(self.nodes)

    @property
    def cores(self) -> int:
        return self.links[0].cores if self.links else 1

    @property
    def slots_per_core(self) -> int:
        return self.links[0].slots_per_core if self.links else 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nodes": list(self.nodes),
            "links": [{"src": l.src, "dst": l.dst, "length_km": l.length_km} for l in self.links],
        }


def neighbors(topology: Topology, node: str) -> list[tuple[str, Link]]:
    """Links incident to ``node`` as ``(neighbor, link)`` pairs sorted by neighbor id."""
    try:
        return list(topology._adj[node])
    except KeyError:
        raise KeyError(f"unknown node {node!r}") from None


def topology_from_dict(data: dict, cores: int = 1, slots_per_core: int = 320) -> Topology:
    if not isinstance(data, dict):
        raise TopologyError("topology document must be a JSON object")
    unknown = set(data) - {"name", "nodes", "links"}
    if unknown:
        raise TopologyError(f"unknown topology keys: {sorted(unknown)}")
    try:
        nodes = data["nodes"]
        raw_links = data["links"]
    except KeyError as exc:
        raise TopologyError(f"missing topology key {exc.args[0]!r}") from None
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise TopologyError("'nodes' must be an array of strings")
    if not isinstance(raw_links, list):
        raise TopologyError("'links' must be an array")
    links = []
    for i, raw in enumerate(raw_links):
        if not isinstance(raw, dict) or set(raw) != {"src", "dst", "length_km"}:
            raise TopologyError(f"links[{i}] must have exactly the keys src, dst, length_km")
        length = raw["length_km"]
        if isinstance(length, bool) or not isinstance(length, (int, float)):
            raise TopologyError(f"links[{i}].length_km must be a number")
        links.append(Link(str(raw["src"]), str(raw["dst"]), float(length), cores, slots_per_core))
    return Topology(str(data.get("name", "")), tuple(nodes), tuple(links))


def load_topology(path: str | FsPath, cores: int = 1, slots_per_core: int = 320) -> Topology:
    """Read and validate a topology file.

    Raises:
        TopologyError: if the file does not parse or violates an invariant
            (undeclared endpoint, nonpositive length, duplicate node).
    """
    try:
        text = FsPath(path).read_text()
    except OSError as exc:
        raise TopologyError(f"cannot read topology file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TopologyError(f"{path}: not valid JSON ({exc})") from exc
    return topology_from_dict(data, cores, slots_per_core)


def save_topology(topology: Topology, path: str | FsPath) -> None:
    FsPath(path).write_text(json.dumps(topology.to_dict(), indent=2) + "\n")


def sample_topology_path(name: str) -> FsPath:
    """Path of a bundled sample topology (``"nsf14"`` or ``"us24"``)."""
    ref = resources.files("eonsim") / "data" / f"{name}.json"
    return FsPath(str(ref))


def resolve_topology_path(name_or_path: str) -> FsPath:
    """Accept either a filesystem path or the name of a bundled sample."""
    p = FsPath(name_or_path)
    if p.exists():
        return p
    sample = sample_topology_path(name_or_path)
    if sample.exists():
        return sample
    return p
