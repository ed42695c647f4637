import math
from collections import Counter
from functools import cmp_to_key

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dtsquare.clique import CongestedClique
from dtsquare.geometry.predicates import Box, Point, make_edge
from dtsquare.geometry.voronoi import PERIMETER, clipped_regions, oracle_dual_edges
from dtsquare.grid import GridSquareId, square_number
from dtsquare.protocol.dt_square import (
    DTSquare,
    ProtocolError,
    auto_cmsg,
    distribute,
    dt_square,
    voronoi_from_delaunay,
)
from dtsquare.protocol.regions import compare_directions, walk_region
from dtsquare.smoothness import generate_perturbed_grid


class RecordingClique(CongestedClique):
    """Keeps the message lists handed to each primitive, per phase."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.calls = []

    def route(self, messages):
        msgs = list(messages)
        self.calls.append((self._phase, "route", msgs))
        return super().route(msgs)

    def route_batched(self, messages):
        msgs = list(messages)
        self.calls.append((self._phase, "route_batched", msgs))
        return super().route_batched(msgs)

    def messages_in(self, phase, kind):
        return [m for ph, k, ms in self.calls if ph == phase and k == kind for m in ms]


def make_proto(points, n, bits, **kw):
    sim = RecordingClique(n, cmsg=auto_cmsg(bits, n))
    return DTSquare(sim, distribute(points, n), bits, **kw)


def grid16():
    return generate_perturbed_grid(16, 3, 18), 4, 18


# -- 3(a)/(b) ----------------------------------------------------------------------------

def test_level_zero_sort_is_coordinate_sort():
    pts, n, bits = grid16()
    proto = make_proto(pts, n, bits)
    proto.phase_prefix_and_sort(0)
    flat = [k for nd in proto.nodes for k in nd.held]
    assert all(k.num == 0 for k in flat)
    assert [(k.x, k.y) for k in flat] == sorted(pts)


def test_level_two_nodes_hold_consecutive_cells():
    pts, n, bits = grid16()
    proto = make_proto(pts, n, bits)
    proto.phase_prefix_and_sort(2)
    for k, nd in enumerate(proto.nodes):
        assert [p.num for p in nd.held] == list(range(4 * k, 4 * k + 4))
        assert nd.ranges[k] == (4 * k, 4 * k + 3)
    assert all(lo <= hi for lo, hi in proto.nodes[0].ranges)


# -- 3(c) ------------------------------------------------------------------------------------

def clustered16():
    # 10 points in the lower-left level-1 cell, 2 in each other cell
    bits = 6
    inside = [Point(1 + 3 * k, 2 + 5 * (k % 5) + k // 5) for k in range(10)]
    rest = [Point(40, 5), Point(50, 20), Point(5, 40), Point(25, 55),
            Point(45, 45), Point(60, 35)]
    return inside + rest, 4, bits


def test_straddling_cell_partials_go_to_first_holder():
    pts, n, bits = clustered16()
    proto = make_proto(pts, n, bits)
    proto.phase_prefix_and_sort(1)
    proto.phase_square_counts()
    # cell 0 spans positions 0..9: nodes 0, 1 and 2
    partials = proto.sim.messages_in("square-counts", "route")
    assert sorted((m.src, m.dst, m.payload[0]) for m in partials) == [(1, 0, 0), (2, 0, 0)]
    assert proto.nodes[0].counts[0] == 10


def test_counts_match_recount():
    pts, n, bits = clustered16()
    for level in range(4):
        proto = make_proto(pts, n, bits)
        proto.phase_prefix_and_sort(level)
        proto.phase_square_counts()
        want = Counter(square_number(p, level, bits) for p in pts)
        got = {}
        for nd in proto.nodes:
            for num, c in nd.counts.items():
                assert num not in got, "count held by two nodes"
                got[num] = c
        assert got == dict(want)


def test_cell_inside_one_node_sends_nothing():
    pts, n, bits = grid16()
    proto = make_proto(pts, n, bits)
    proto.phase_prefix_and_sort(2)
    proto.phase_square_counts()
    assert proto.sim.messages_in("square-counts", "route") == []


# -- 3(d) ------------------------------------------------------------------------------------

def test_tl_count_of_unit_square_is_n_squared():
    pts, n, bits = grid16()
    proto = make_proto(pts, n, bits)
    proto.nodes[0].active = [GridSquareId(0, 0)]
    proto.phase_prefix_and_sort(0)
    proto.phase_square_counts()
    proto.phase_tl_queries()
    assert proto.nodes[0].cell_count == {0: 16}


def test_corner_owner_queries_at_most_nine_cells():
    pts, n, bits = clustered16()
    proto = make_proto(pts, n, bits)
    proto.nodes[3].active = [GridSquareId.at(2, 0, 0)]
    proto.phase_prefix_and_sort(2)
    proto.phase_square_counts()
    proto.phase_tl_queries()
    queries = [m for m in proto.sim.messages_in("tl-queries", "route_batched")
               if m.src == 3 and len(m.payload) == 1]
    assert len(queries) <= 9
    # query goes to the smallest holder only
    for m in queries:
        assert m.dst == proto.nodes[3].holders(m.payload[0])[0]
    want = Counter(square_number(p, 2, bits) for p in pts)
    for c in range(3):
        for r in range(3):
            num = GridSquareId.at(2, c, r).num
            assert proto.nodes[3].cell_count[num] == want.get(num, 0)


# -- 3(e) ------------------------------------------------------------------------------------

def test_small_input_resolved_at_level_zero():
    pts, n, bits = grid16()
    res = dt_square(pts, n, bits)
    assert res.report.levels_used == 1
    assert res.report.resolved_per_level == [1]
    assert res.report.levels_used <= bits + 1


def test_split_then_resolve_multilevel():
    pts = generate_perturbed_grid(64, 0, 21)
    res = dt_square(pts, 8, 21, threshold_factor=4)
    assert res.report.levels_used > 1
    assert res.report.active_per_level[:3] == [1, 4, 16]
    assert set(res.all_edges()) == oracle_dual_edges(pts, Box(0, 0, 1 << 21, 1 << 21))


def test_empty_resolved_square_aborts():
    pts = generate_perturbed_grid(64, 1, 21)
    with pytest.raises(ProtocolError) as info:
        dt_square(pts, 8, 21, threshold_factor=2)
    assert info.value.kind == "empty-square"


def test_depth_guard():
    pts = [Point(0, 0), Point(3, 1), Point(1, 3), Point(4, 4)]
    with pytest.raises(ProtocolError) as info:
        dt_square(pts, 2, 2, threshold_factor=-1)
    assert info.value.kind == "depth"


# -- 3(f) ------------------------------------------------------------------------------------

def _balance_with(counts, n=4):
    pts, _, bits = grid16()
    proto = make_proto(pts, n, bits)
    nums = iter(range(1000))
    for nd, c in zip(proto.nodes, counts):
        nd.active = [GridSquareId(5, next(nums)) for _ in range(c)]
    before = [(nd.ident, sq.num) for nd in proto.nodes for sq in nd.active]
    total = proto.phase_balance(5)
    return proto, total, before


def test_balance_2n_plus_1():
    proto, total, before = _balance_with([9, 0, 0, 0])
    assert total == 9
    assert [len(nd.active) for nd in proto.nodes] == [3, 2, 2, 2]
    # order by (owner, num) is preserved across the new blocks
    after = [sq.num for nd in proto.nodes for sq in nd.active]
    assert after == [num for _, num in sorted(before)]


def test_balance_one_each_and_zero():
    proto, total, _ = _balance_with([0, 2, 2, 0])
    assert total == 4 and [len(nd.active) for nd in proto.nodes] == [1, 1, 1, 1]
    proto, total, _ = _balance_with([0, 0, 0, 0])
    assert total == 0 and all(nd.active == [] for nd in proto.nodes)


@given(st.lists(st.integers(0, 12), min_size=4, max_size=4))
def test_balance_bounds(counts):
    proto, total, before = _balance_with(counts)
    sizes = [len(nd.active) for nd in proto.nodes]
    assert sum(sizes) == total == sum(counts)
    assert max(sizes) == math.ceil(total / 4)
    assert sizes == sorted(sizes, reverse=True)


# -- 3(g) ------------------------------------------------------------------------------------

def _edges(k):
    return [make_edge(Point(i, 0), Point(i, 1 + i)) for i in range(k)]


def _dedup_with(batches, n=4):
    pts, _, bits = grid16()
    proto = make_proto(pts, n, bits)
    for nd, b in zip(proto.nodes, batches):
        nd.edges = list(b)
    proto.phase_dedup()
    return proto


def test_dedup_no_duplicates_keeps_set():
    es = _edges(10)
    proto = _dedup_with([es[:3], es[3:6], es[6:8], es[8:]])
    got = [e for nd in proto.nodes for e in nd.edges]
    assert sorted(got) == sorted(es)
    assert max(len(nd.edges) for nd in proto.nodes) <= math.ceil(10 / 4)


def test_dedup_every_edge_twice_halves():
    es = _edges(8)
    proto = _dedup_with([es[:4], es[4:], es[:4], es[4:]])
    assert sorted(e for nd in proto.nodes for e in nd.edges) == sorted(es)


def test_dedup_duplicate_across_node_boundary():
    es = _edges(6)
    # after the sort, node 0 holds 4 keys and node 1 the rest: the two copies
    # of es[3] (one from node 0, one from node 3) sit on either side of the cut
    proto = _dedup_with([es[:4], es[4:], [], [es[3]]])
    got = [e for nd in proto.nodes for e in nd.edges]
    assert sorted(got) == sorted(es) and len(got) == len(set(got))


# -- Voronoi reconstruction --------------------------------------------------------------------

def test_two_sites_two_regions():
    bits = 4
    s, t = Point(4, 8), Point(12, 8)
    sim = CongestedClique(2, cmsg=auto_cmsg(bits, 2))
    regions, degree = voronoi_from_delaunay(sim, [[make_edge(s, t)], []], 2, bits)
    merged = {k: v for r in regions for k, v in r.items()}
    assert set(merged) == {s, t} and degree == 1
    for site, other in ((s, t), (t, s)):
        r = merged[site]
        assert r.arcs.count(other) == 1
        assert sum(a is PERIMETER for a in r.arcs) == 3
        assert r.area == 128


def test_region_owner_is_smallest_holder():
    pts, n, bits = grid16()
    res = dt_square(pts, n, bits)
    owners = {}
    for i, r in enumerate(res.regions):
        for site in r:
            assert site not in owners
            owners[site] = i
    assert set(owners) == set(pts)


def test_interior_site_has_no_perimeter_arcs():
    pts = generate_perturbed_grid(64, 2, 21)
    res = dt_square(pts, 8, 21)
    regs = res.all_regions()
    D = 1 << 21
    middle = [p for p in pts if D // 4 < p.x < 3 * D // 4 and D // 4 < p.y < 3 * D // 4]
    assert middle
    for p in middle:
        assert PERIMETER not in regs[p].arcs
    assert regs == clipped_regions(pts, Box(0, 0, D, D))


def _angle(d):
    a = math.atan2(d[1], d[0])
    return a + 2 * math.pi if a < 0 else a


directions = st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)).filter(lambda d: d != (0, 0))


@given(st.lists(directions, min_size=2, max_size=12, unique=True))
def test_angular_order_matches_atan2(dirs):
    # one direction per ray: drop positive multiples so the order is strict
    seen, rays = set(), []
    for d in dirs:
        g = math.gcd(*d)
        key = (d[0] // g, d[1] // g)
        if key not in seen:
            seen.add(key)
            rays.append(d)
    ours = sorted(rays, key=cmp_to_key(compare_directions))
    assert ours == sorted(rays, key=_angle)


def test_angular_order_starts_at_positive_x():
    rays = [(0, -1), (-1, 0), (0, 1), (1, 0), (1, 1), (-1, -1)]
    ours = sorted(rays, key=cmp_to_key(compare_directions))
    assert ours == [(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)]


def test_walk_without_neighbours_is_the_square():
    box = Box(0, 0, 8, 8)
    r = walk_region(Point(3, 3), [], box)
    assert r.vertices == ((0, 0), (8, 0), (8, 8), (0, 8)) and r.area == 64


def test_missing_region_is_an_inconsistency():
    bits = 4
    s, t, u = Point(2, 2), Point(12, 3), Point(7, 13)
    sim = CongestedClique(2, cmsg=auto_cmsg(bits, 2))
    with pytest.raises(ProtocolError) as info:
        voronoi_from_delaunay(sim, [[make_edge(s, t)], []], 3, bits)
    assert info.value.kind == "inconsistency"


# -- observer checks -------------------------------------------------------------------------

def test_partition_check_catches_overlap():
    pts, n, bits = grid16()
    proto = make_proto(pts, n, bits)
    proto.nodes[0].active = [GridSquareId(1, k) for k in range(4)]
    proto._check_partition()
    proto.nodes[1].active = [GridSquareId(2, 0)]
    with pytest.raises(ProtocolError):
        proto._check_partition()


def test_resolution_check_catches_unsplit_parent():
    pts, n, bits = grid16()
    proto = make_proto(pts, n, bits)
    proto.resolved_log.append((GridSquareId(1, 2), 0, 3))
    with pytest.raises(ProtocolError):
        proto._check_resolution()


def test_distribute_rejects_wrong_count_and_duplicates():
    with pytest.raises(ValueError):
        distribute([Point(0, 0)] * 3, 2)
    with pytest.raises(ValueError):
        distribute([Point(0, 0), Point(0, 0), Point(1, 1), Point(2, 3)], 2)
