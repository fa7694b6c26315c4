"""Per-(link, core) slot occupancy and spectrum assignment policies.

Occupancy lives in one ``int64`` array of shape ``(links, cores, slots)``;
``FREE`` (-1) marks an idle slot, anything else is the owning lightpath id.
A lightpath holds the same core and the same contiguous slot interval on
every link of its path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from eonsim.crosstalk import CoreLayout
    from eonsim.routing import Path

FREE = -1


class SpectrumError(RuntimeError):
    """Inconsistent grid operation (collision, unknown id). Aborts the run."""


class FitPolicy(str, Enum):
    FIRST_FIT = "first_fit"
    BEST_FIT = "best_fit"
    LAST_FIT = "last_fit"


@dataclass(frozen=True)
class SlotRange:
    start: int
    len: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.len < 1:
            raise ValueError(f"invalid slot range start={self.start} len={self.len}")

    @property
    def stop(self) -> int:
        return self.start + self.len


@dataclass(frozen=True)
class Modulation:
    name: str
    bits_per_symbol: int
    reach_km: float


DEFAULT_MODULATIONS: tuple[Modulation, ...] = (
    Modulation("16QAM", 4, 500.0),
    Modulation("8QAM", 3, 1000.0),
    Modulation("QPSK", 2, 2000.0),
    Modulation("BPSK", 1, 4000.0),
)


@dataclass(frozen=True)
class _Allocation:
    link_ids: tuple[int, ...]
    core: int
    range: SlotRange


class SpectrumGrid:
    """Slot occupancy for every (link, core) of one simulation run."""

    def __init__(self, num_links: int, cores: int, slots_per_core: int):
        self.occupancy = np.full((num_links, cores, slots_per_core), FREE, dtype=np.int64)
        self._allocations: dict[int, _Allocation] = {}

    @classmethod
    def for_topology(cls, topology) -> SpectrumGrid:
        return cls(len(topology.links), topology.cores, topology.slots_per_core)

    @property
    def cores(self) -> int:
        return self.occupancy.shape[1]

    @property
    def slots_per_core(self) -> int:
        return self.occupancy.shape[2]

    def __contains__(self, lightpath_id: int) -> bool:
        return lightpath_id in self._allocations

    def __len__(self) -> int:
        return len(self._allocations)

    def lightpath_ids(self) -> list[int]:
        return sorted(self._allocations)

    def copy(self) -> SpectrumGrid:
        new = SpectrumGrid.__new__(SpectrumGrid)
        new.occupancy = self.occupancy.copy()
        new._allocations = dict(self._allocations)
        return new

    def same_state(self, other: SpectrumGrid) -> bool:
        return np.array_equal(self.occupancy, other.occupancy) and self._allocations == other._allocations

    def free_slot_count(self) -> int:
        return int(np.count_nonzero(self.occupancy == FREE))

    def is_empty(self) -> bool:
        return not self._allocations and self.free_slot_count() == self.occupancy.size

    def free_mask(self, path: Path) -> np.ndarray:
        """Boolean ``(cores, slots)`` mask of slots idle on every link of ``path``."""
        return (self.occupancy[list(path.link_ids)] == FREE).all(axis=0)

    def allocate(self, lightpath_id: int, path: Path, core: int, slots: SlotRange) -> None:
        if lightpath_id == FREE:
            raise ValueError(f"lightpath id {FREE} is reserved for free slots")
        if lightpath_id in self._allocations:
            raise SpectrumError(f"lightpath {lightpath_id} is already allocated")
        if slots.stop > self.slots_per_core or not 0 <= core < self.cores:
            raise SpectrumError(f"range {slots} on core {core} is outside the grid")
        ids = list(path.link_ids)
        view = self.occupancy[ids, core, slots.start : slots.stop]
        if (view != FREE).any():
            raise SpectrumError(
                f"collision allocating lightpath {lightpath_id} at core {core} slots "
                f"[{slots.start},{slots.stop}) on links {ids}"
            )
        self.occupancy[ids, core, slots.start : slots.stop] = lightpath_id
        self._allocations[lightpath_id] = _Allocation(tuple(path.link_ids), core, slots)

    def release(self, lightpath_id: int) -> None:
        try:
            alloc = self._allocations.pop(lightpath_id)
        except KeyError:
            raise SpectrumError(f"unknown lightpath {lightpath_id}") from None
        self.occupancy[list(alloc.link_ids), alloc.core, alloc.range.start : alloc.range.stop] = FREE

    def audit(self) -> None:
        """Check continuity/contiguity of every lightpath and absence of stray slots."""
        expected = 0
        for lp, alloc in self._allocations.items():
            block = self.occupancy[list(alloc.link_ids), alloc.core, alloc.range.start : alloc.range.stop]
            if not (block == lp).all():
                raise SpectrumError(f"audit: lightpath {lp} lost slots")
            expected += block.size
        owned = int(np.count_nonzero(self.occupancy != FREE))
        if owned != expected:
            raise SpectrumError(f"audit: {owned - expected} slots held by unknown lightpaths")


def _runs(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start indices and lengths of the maximal True runs of a 1-D mask."""
    padded = np.concatenate(([0], mask.view(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    starts, stops = edges[0::2], edges[1::2]
    return starts, stops - starts


def _place(mask: np.ndarray, n_slots: int, policy: FitPolicy) -> int | None:
    starts, lengths = _runs(mask)
    ok = lengths >= n_slots
    if not ok.any():
        return None
    starts, lengths = starts[ok], lengths[ok]
    if policy is FitPolicy.FIRST_FIT:
        return int(starts[0])
    if policy is FitPolicy.LAST_FIT:
        return int(starts[-1] + lengths[-1] - n_slots)
    # argmin returns the first (lowest start) among equally small gaps
    return int(starts[np.argmin(lengths)])


def find_fit(
    grid: SpectrumGrid,
    path: Path,
    core_order: Sequence[int],
    n_slots: int,
    policy: FitPolicy | str = FitPolicy.FIRST_FIT,
    mask: np.ndarray | None = None,
) -> tuple[int, SlotRange] | None:
    """Pick a core and slot range free on every link of ``path``.

    Cores are tried in ``core_order``; the first core with any feasible
    placement wins and ``policy`` chooses the placement inside it. Best-fit
    measures gaps on the intersection of the links' free masks. ``mask``
    optionally restricts admissible slots further (``(cores, slots)`` bool).
    """
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    if not core_order:
        raise ValueError("core_order must be nonempty")
    policy = FitPolicy(policy)
    free = grid.free_mask(path)
    if mask is not None:
        free &= mask
    for core in core_order:
        start = _place(free[core], n_slots, policy)
        if start is not None:
            return core, SlotRange(start, n_slots)
    return None


def slots_needed(bandwidth_gbps: float, bits_per_symbol: int, slot_width_ghz: float = 12.5, guard_slots: int = 0) -> int:
    """Slots for a demand: ``ceil(bandwidth / (bits_per_symbol * slot_width)) + guard``."""
    capacity = bits_per_symbol * slot_width_ghz
    # rounding guards against 1e-16 noise pushing an exact ratio over the next integer
    return math.ceil(round(bandwidth_gbps / capacity, 9)) + guard_slots


def select_modulation(path_length_km: float, table: Iterable[Modulation] = DEFAULT_MODULATIONS) -> Modulation | None:
    """Most efficient format whose reach covers the path; ``None`` if none does."""
    for mod in sorted(table, key=lambda m: -m.bits_per_symbol):
        if mod.reach_km >= path_length_km:
            return mod
    return None


def prioritized_core_order(layout: CoreLayout) -> list[int]:
    """Cores with fewer neighbours first (less crosstalk exposure), ties by index."""
    return sorted(range(layout.cores), key=lambda c: (len(layout.adjacency[c]), c))


def core_order_for(layout: CoreLayout, mode: str) -> list[int]:
    if mode == "prioritized":
        return prioritized_core_order(layout)
    if mode == "index":
        return list(range(layout.cores))
    raise ValueError(f"unknown core_order {mode!r}")
