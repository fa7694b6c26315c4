"""Inter-core crosstalk in multi-core fiber.

For a candidate on core ``c`` at slot ``s`` of path ``P``::

    XT(P, c, s) = sum over links e in P
                  sum over cores c' adjacent to c that carry traffic at slot s on e
                  (1 - exp(-2 h L(e))) / (1 + exp(-2 h L(e)))

with ``h`` the power coupling coefficient (per km) and ``L(e)`` the link length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from eonsim.routing import Path
from eonsim.spectrum import FREE, SlotRange, SpectrumGrid

DEFAULT_H = 2e-5
DEFAULT_XT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class CrosstalkParams:
    h: float = DEFAULT_H
    xt_threshold: float = DEFAULT_XT_THRESHOLD

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if self.xt_threshold < 0:
            raise ValueError("xt_threshold must be >= 0")


@dataclass(frozen=True)
class CoreLayout:
    """Core geometry of the fiber cross-section.

    * 1 core: no neighbours.
    * 4 cores: square; core ``i`` touches ``i-1`` and ``i+1`` (mod 4).
    * 7 cores: hexagon; core 0 is the centre and touches all outer cores,
      outer cores 1..6 form a ring.
    """

    cores: int
    adjacency: dict[int, frozenset[int]] = field(compare=False)

    @property
    def matrix(self) -> np.ndarray:
        return _adjacency_matrix(self)

    def neighbours(self, core: int) -> list[int]:
        return sorted(self.adjacency[core])


@lru_cache(maxsize=None)
def core_layout(cores: int) -> CoreLayout:
    if cores == 1:
        adj = {0: frozenset()}
    elif cores == 4:
        adj = {i: frozenset({(i - 1) % 4, (i + 1) % 4}) for i in range(4)}
    elif cores == 7:
        adj = {0: frozenset(range(1, 7))}
        for i in range(1, 7):
            adj[i] = frozenset({0, (i - 2) % 6 + 1, i % 6 + 1})
    else:
        raise ValueError(f"unsupported core count {cores}; expected 1, 4 or 7")
    return CoreLayout(cores, adj)


_MATRICES: dict[int, np.ndarray] = {}


def _adjacency_matrix(layout: CoreLayout) -> np.ndarray:
    m = _MATRICES.get(layout.cores)
    if m is None:
        m = np.zeros((layout.cores, layout.cores))
        for c, nbrs in layout.adjacency.items():
            m[c, list(nbrs)] = 1.0
        _MATRICES[layout.cores] = m
    return m


def link_xt_term(h: float, length_km: float) -> float:
    """Per-link coupling factor; algebraically ``tanh(h * L)``."""
    x = math.exp(-2.0 * h * length_km)
    return -math.expm1(-2.0 * h * length_km) / (1.0 + x)


def _link_terms(params: CrosstalkParams, path: Path) -> np.ndarray:
    return np.array([link_xt_term(params.h, link.length_km) for link in path.links])


def path_xt(grid: SpectrumGrid, params: CrosstalkParams, layout: CoreLayout, path: Path, core: int, slot: int) -> float:
    total = 0.0
    nbrs = layout.neighbours(core)
    for link_id, link in zip(path.link_ids, path.links):
        term = link_xt_term(params.h, link.length_km)
        for c in nbrs:
            if grid.occupancy[link_id, c, slot] != FREE:
                total += term
    return total


def xt_profile(grid: SpectrumGrid, params: CrosstalkParams, layout: CoreLayout, path: Path) -> np.ndarray:
    """``path_xt`` for every (core, slot) at once, shape ``(cores, slots)``."""
    busy = grid.occupancy[list(path.link_ids)] != FREE
    weighted = np.tensordot(_link_terms(params, path), busy, axes=(0, 0))
    return layout.matrix @ weighted


def xt_admissible_mask(grid: SpectrumGrid, params: CrosstalkParams, layout: CoreLayout, path: Path) -> np.ndarray:
    """Slots whose crosstalk stays within the threshold; a range passes iff all its slots do."""
    return xt_profile(grid, params, layout, path) <= params.xt_threshold


def range_xt_ok(
    grid: SpectrumGrid,
    params: CrosstalkParams,
    layout: CoreLayout,
    path: Path,
    core: int,
    slots: SlotRange,
) -> bool:
    """True iff the worst slot of ``slots`` on ``core`` is within the crosstalk threshold."""
    worst = max(path_xt(grid, params, layout, path, core, s) for s in range(slots.start, slots.stop))
    return worst <= params.xt_threshold


def aggregate_path_xt_load(grid: SpectrumGrid, params: CrosstalkParams, layout: CoreLayout, path: Path) -> float:
    """Mean crosstalk over all (core, slot) positions of ``path`` given current traffic."""
    return float(xt_profile(grid, params, layout, path).mean())
