import itertools

import numpy as np
import pytest

from eonsim.crosstalk import CrosstalkParams, core_layout
from eonsim.routing import k_shortest_paths, make_path
from eonsim.slicing import (
    NO_ROUTE,
    NO_SPECTRUM,
    XT_THRESHOLD,
    AssignmentSettings,
    SliceConfig,
    provision_with_slicing,
    rollback,
    split_bandwidth,
)
from eonsim.spectrum import FREE, Modulation, SlotRange, SpectrumError, SpectrumGrid, find_fit
from eonsim.traffic import Request

from conftest import make_topology

QPSK_ONLY = (Modulation("QPSK", 2, 5000.0),)


def settings_for(cores=1, **kw):
    kw.setdefault("modulations", QPSK_ONLY)
    return AssignmentSettings(core_order=tuple(range(cores)), layout=core_layout(cores), **kw)


def req(bw, rid=0, src="A", dst="B"):
    return Request(rid, src, dst, bw, 0.0, 1.0)


def counter():
    return itertools.count(1).__next__


@pytest.fixture
def ab():
    return make_topology([("A", "B", 100)], cores=1, slots=16)


def test_levels():
    assert SliceConfig(1).levels() == [1]
    assert SliceConfig(2).levels() == [1, 2]
    assert SliceConfig(8).levels() == [1, 2, 4, 8]
    assert SliceConfig(5).levels() == [1, 2, 4]
    with pytest.raises(ValueError):
        SliceConfig(0)


def test_split_conserves_bandwidth():
    for bw in (25.0, 100.0, 333.3):
        for s in (1, 2, 4, 8):
            parts = split_bandwidth(bw, s)
            assert len(parts) == s
            assert sum(parts) == pytest.approx(bw, rel=1e-15)


def test_whole_fit_single_segment(ab):
    grid = SpectrumGrid.for_topology(ab)
    path = make_path(ab, ["A", "B"])
    out = provision_with_slicing(req(100), [path], grid, SliceConfig(8), settings_for(), counter())
    assert not out.blocked
    assert len(out.segments) == 1
    seg = out.segments[0]
    # 100 Gb/s at QPSK on 12.5 GHz slots: 4 slots, first fit
    assert (seg.core, seg.range) == (0, SlotRange(0, 4))
    assert seg.bandwidth_gbps == 100


def test_budget_one_equals_plain_first_fit(ab):
    grid = SpectrumGrid.for_topology(ab)
    grid.occupancy[0, 0, 3:5] = 77
    path = make_path(ab, ["A", "B"])
    expected = find_fit(grid, path, [0], 4, "first_fit")
    out = provision_with_slicing(req(100), [path], grid, SliceConfig(1), settings_for(), counter())
    assert expected == (0, SlotRange(5, 4))
    assert [(s.core, s.range) for s in out.segments] == [expected]


def test_two_halves_in_disjoint_gaps(ab):
    grid = SpectrumGrid.for_topology(ab)
    grid.occupancy[0, 0, :] = 50
    grid.occupancy[0, 0, 1:5] = FREE
    grid.occupancy[0, 0, 9:13] = FREE
    before = grid.copy()
    path = make_path(ab, ["A", "B"])
    # 200 Gb/s needs 8 contiguous QPSK slots; only two 4-slot gaps exist
    assert provision_with_slicing(req(200), [path], grid, SliceConfig(1), settings_for(), counter()).reason == NO_SPECTRUM
    assert grid.same_state(before)
    out = provision_with_slicing(req(200), [path], grid, SliceConfig(8), settings_for(), counter())
    assert [s.range for s in out.segments] == [SlotRange(1, 4), SlotRange(9, 4)]
    assert sum(s.bandwidth_gbps for s in out.segments) == 200


def test_full_grid_blocks_and_is_untouched(ab):
    grid = SpectrumGrid.for_topology(ab)
    grid.occupancy[:] = 5
    before = grid.copy()
    out = provision_with_slicing(req(25), [make_path(ab, ["A", "B"])], grid, SliceConfig(8), settings_for(), counter())
    assert out.reason == NO_SPECTRUM
    assert grid.same_state(before)


def test_partial_level_rolled_back(ab):
    grid = SpectrumGrid.for_topology(ab)
    grid.occupancy[0, 0, :] = 50
    grid.occupancy[0, 0, 0:4] = FREE  # room for exactly one 100G half of a 200G demand at level 2
    grid.occupancy[0, 0, 6:8] = FREE
    before = grid.copy()
    path = make_path(ab, ["A", "B"])
    out = provision_with_slicing(req(200, rid=9), [path], grid, SliceConfig(2), settings_for(), counter())
    assert out.blocked
    assert grid.same_state(before)
    assert not (grid.occupancy == 1).any()


def test_unreachable_is_no_route():
    topo = make_topology([("A", "B", 9000)], cores=1, slots=16)
    grid = SpectrumGrid.for_topology(topo)
    out = provision_with_slicing(req(25), [make_path(topo, ["A", "B"])], grid, SliceConfig(8), settings_for(), counter())
    assert out.reason == NO_ROUTE
    assert provision_with_slicing(req(25), [], grid, SliceConfig(8), settings_for(), counter()).reason == NO_ROUTE


def test_xt_rejection_reason():
    topo = make_topology([("A", "B", 100)], cores=4, slots=4)
    grid = SpectrumGrid.for_topology(topo)
    grid.occupancy[0, 1, :] = 3
    grid.occupancy[0, 0, :] = 3
    grid.occupancy[0, 2, :] = 3
    path = make_path(topo, ["A", "B"])
    st = AssignmentSettings(core_order=(0, 1, 2, 3), modulations=QPSK_ONLY, layout=core_layout(4),
                            xt_params=CrosstalkParams(h=1e-4, xt_threshold=1e-6))
    # core 3 is free but sits next to busy cores 0 and 2
    out = provision_with_slicing(req(25), [path], grid, SliceConfig(1, xt_check=True), st, counter())
    assert out.reason == XT_THRESHOLD
    out = provision_with_slicing(req(25), [path], grid, SliceConfig(1, xt_check=False), st, counter())
    assert out.segments[0].core == 3


def test_segments_can_use_other_candidates():
    topo = make_topology([("A", "B", 100), ("A", "C", 100), ("C", "B", 100)], cores=1, slots=8)
    grid = SpectrumGrid.for_topology(topo)
    grid.occupancy[topo.link_id("A", "B"), 0, 4:] = 1
    grid.occupancy[topo.link_id("A", "C"), 0, 4:] = 1
    cands = k_shortest_paths(topo, "A", "B", 2)
    out = provision_with_slicing(req(200), cands, grid, SliceConfig(2), settings_for(), counter())
    assert [s.path.nodes for s in out.segments] == [("A", "B"), ("A", "C", "B")]


def test_rollback(ab):
    grid = SpectrumGrid.for_topology(ab)
    before = grid.copy()
    path = make_path(ab, ["A", "B"])
    grid.occupancy[0, 0, 2:6] = 1
    grid.occupancy[0, 0, 8:16] = 1
    base = grid.copy()
    out = provision_with_slicing(req(100), [path], grid, SliceConfig(8), settings_for(), itertools.count(10).__next__)
    assert len(out.segments) == 2
    rollback(grid, out.segments)
    assert grid.same_state(base)
    rollback(grid, [])
    assert grid.same_state(base)
    with pytest.raises(SpectrumError):
        rollback(grid, out.segments)
    assert not before.same_state(base)


def random_state(rng, topo):
    grid = SpectrumGrid.for_topology(topo)
    for lp in range(1000, 1000 + int(rng.integers(0, 40))):
        link = topo.links[int(rng.integers(len(topo.links)))]
        path = make_path(topo, [link.src, link.dst])
        core = int(rng.integers(topo.cores))
        n = int(rng.integers(1, 6))
        start = int(rng.integers(topo.slots_per_core - n + 1))
        if (grid.occupancy[path.link_ids[0], core, start : start + n] == FREE).all():
            grid.allocate(lp, path, core, SlotRange(start, n))
    return grid


def test_success_monotone_in_budget_and_atomic():
    rng = np.random.default_rng(3)
    topo = make_topology([("A", "B", 300), ("B", "C", 600), ("A", "C", 1200), ("C", "D", 200)], cores=4, slots=24)
    pairs = [("A", "C"), ("A", "D"), ("B", "D"), ("A", "B")]
    st = AssignmentSettings(core_order=(0, 1, 2, 3), layout=core_layout(4), xt_params=CrosstalkParams(2e-5, 1e-2))
    for _ in range(200):
        grid = random_state(rng, topo)
        src, dst = pairs[int(rng.integers(len(pairs)))]
        cands = k_shortest_paths(topo, src, dst, 2)
        request = req(float(rng.choice([25, 50, 100, 200, 400])), src=src, dst=dst)
        xt = bool(rng.integers(2))
        ok_prev = False
        for budget in (1, 2, 3, 4, 8, 16):
            g = grid.copy()
            out = provision_with_slicing(request, cands, g, SliceConfig(budget, xt), st, counter())
            if ok_prev:
                assert not out.blocked
            if out.blocked:
                assert g.same_state(grid)
            else:
                assert sum(s.bandwidth_gbps for s in out.segments) == pytest.approx(request.bandwidth_gbps)
                assert len(out.segments) <= budget
                g.audit()
            ok_prev = not out.blocked
