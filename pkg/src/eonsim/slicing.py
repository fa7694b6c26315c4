"""Light-segment slicing: serve a demand as several independently placed segments.

When the whole demand does not fit, the bandwidth is split into 2, 4, 8, ...
equal parts (bounded by the slice budget) and every part is placed on its
own (path, core, slot range). A level succeeds only if all of its parts
place; otherwise its partial allocations are rolled back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from eonsim.crosstalk import CoreLayout, CrosstalkParams, xt_admissible_mask
from eonsim.routing import Path
from eonsim.spectrum import (
    DEFAULT_MODULATIONS,
    FitPolicy,
    Modulation,
    SlotRange,
    SpectrumGrid,
    find_fit,
    select_modulation,
    slots_needed,
)
from eonsim.traffic import Request

NO_ROUTE = "no_route"
NO_SPECTRUM = "no_spectrum"
XT_THRESHOLD = "xt_threshold"
BLOCK_REASONS = (NO_ROUTE, NO_SPECTRUM, XT_THRESHOLD)


@dataclass(frozen=True)
class LightSegment:
    parent_request: int
    seg_index: int
    lightpath_id: int
    path: Path
    core: int
    range: SlotRange
    modulation: Modulation
    bandwidth_gbps: float


@dataclass(frozen=True)
class SliceConfig:
    max_segments: int = 1
    xt_check: bool = False

    def __post_init__(self) -> None:
        if self.max_segments < 1:
            raise ValueError("max_segments must be >= 1")

    def levels(self) -> list[int]:
        out, s = [], 1
        while s <= self.max_segments:
            out.append(s)
            s *= 2
        return out


@dataclass(frozen=True)
class AssignmentSettings:
    """Everything spectrum assignment needs besides the grid and the candidates."""

    policy: FitPolicy = FitPolicy.FIRST_FIT
    core_order: tuple[int, ...] = (0,)
    slot_width_ghz: float = 12.5
    guard_slots: int = 0
    modulations: tuple[Modulation, ...] = DEFAULT_MODULATIONS
    xt_params: CrosstalkParams = field(default_factory=CrosstalkParams)
    layout: CoreLayout | None = None


@dataclass
class ProvisionResult:
    segments: list[LightSegment]
    reason: str | None = None

    @property
    def blocked(self) -> bool:
        return self.reason is not None


class _Search:
    """Bookkeeping for why a placement attempt failed."""

    def __init__(self) -> None:
        self.reachable = False
        self.xt_rejected = False

    def reason(self) -> str:
        if not self.reachable:
            return NO_ROUTE
        return XT_THRESHOLD if self.xt_rejected else NO_SPECTRUM


def split_bandwidth(bandwidth: float, parts: int) -> list[float]:
    share = bandwidth / parts
    return [share] * (parts - 1) + [bandwidth - share * (parts - 1)]


def _place_part(
    bandwidth: float,
    candidates: Sequence[Path],
    grid: SpectrumGrid,
    cfg: SliceConfig,
    settings: AssignmentSettings,
    search: _Search,
):
    for path in candidates:
        mod = select_modulation(path.length_km, settings.modulations)
        if mod is None:
            continue
        search.reachable = True
        n = slots_needed(bandwidth, mod.bits_per_symbol, settings.slot_width_ghz, settings.guard_slots)
        mask = None
        if cfg.xt_check:
            mask = xt_admissible_mask(grid, settings.xt_params, settings.layout, path)
        fit = find_fit(grid, path, settings.core_order, n, settings.policy, mask)
        if fit is not None:
            return path, fit[0], fit[1], mod
        if cfg.xt_check and not search.xt_rejected:
            if find_fit(grid, path, settings.core_order, n, settings.policy) is not None:
                search.xt_rejected = True
    return None


def provision_with_slicing(
    request: Request,
    candidates: Sequence[Path],
    grid: SpectrumGrid,
    cfg: SliceConfig,
    settings: AssignmentSettings,
    next_id: Callable[[], int],
) -> ProvisionResult:
    """Place ``request`` using the fewest segments that fit, up to the slice budget.

    On success the segments are allocated on ``grid``. On failure the grid is
    left exactly as it was and the result carries a block reason.
    """
    if not candidates:
        return ProvisionResult([], NO_ROUTE)
    search = _Search()
    for level in cfg.levels():
        placed: list[LightSegment] = []
        for idx, bw in enumerate(split_bandwidth(request.bandwidth_gbps, level)):
            hit = _place_part(bw, candidates, grid, cfg, settings, search)
            if hit is None:
                rollback(grid, placed)
                placed = []
                break
            path, core, rng, mod = hit
            lp = next_id()
            grid.allocate(lp, path, core, rng)
            placed.append(LightSegment(request.id, idx, lp, path, core, rng, mod, bw))
        else:
            return ProvisionResult(placed)
        if not search.reachable:
            break
    return ProvisionResult([], search.reason())


def rollback(grid: SpectrumGrid, segments: Sequence[LightSegment]) -> None:
    """Release every segment; unknown ids raise ``SpectrumError``."""
    for seg in reversed(segments):
        grid.release(seg.lightpath_id)
