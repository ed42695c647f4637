"""DT-SQUARE as a program of n clique nodes.

Every node keeps its own state in a ``NodeState``; all communication goes
through the ``CongestedClique`` primitives.  The driver below only
sequences the phases and, separately, checks invariants from the outside
(partition of the unit square, resolution soundness) without feeding
anything back into the nodes.
"""

from __future__ import annotations

import bisect
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from math import ceil
from typing import Optional

from ..clique import CongestedClique, Message, int_bits, log_n_bits
from ..geometry.predicates import Box, Edge, Point, make_edge
from ..geometry.voronoi import dual_edges_within_square
from ..grid import GridSquareId, PrefixedPoint, children, prefixed, square_extent, tl_region
from .regions import RegionError, compare_directions, walk_region

THRESHOLD_FACTOR = 100
ACTIVE_FACTOR = 64
MAX_REQUESTERS = 25


class ProtocolError(RuntimeError):
    """The run was aborted; ``kind`` says why (e.g. ``depth``,
    ``empty-square``, ``inconsistency``)."""

    def __init__(self, kind, detail):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind


def required_bits(bits, n) -> int:
    """Widest payload the protocol sends for coordinates of ``bits`` bits."""
    coord = bits + 1
    sorted_point = 2 * bits + 2 * coord
    dedup_key = 4 * coord + int_bits(n - 1)
    angle_key = 2 * coord + 2 * (coord + 1)
    return max(sorted_point, dedup_key, angle_key)


def auto_cmsg(bits, n, floor=8) -> int:
    return max(floor, ceil(required_bits(bits, n) / log_n_bits(n)))


@dataclass
class NodeState:
    ident: int
    points: list                      # this node's current batch of points
    held: list = field(default_factory=list)       # sorted PrefixedPoints
    ranges: list = field(default_factory=list)     # everyone's (lo, hi) numbers
    counts: dict = field(default_factory=dict)     # full counts, first holder only
    active: list = field(default_factory=list)     # GridSquareIds owned
    cell_count: dict = field(default_factory=dict)  # counts learnt by query
    edges: list = field(default_factory=list)      # local batch of L

    def holders(self, num):
        """Nodes whose sorted batch may contain cell ``num``."""
        his = [r[1] for r in self.ranges]
        j = bisect.bisect_left(his, num)
        out = []
        while j < len(self.ranges) and self.ranges[j][0] <= num:
            out.append(j)
            j += 1
        return out


@dataclass
class LevelStats:
    level: int
    active: int
    resolved: int
    split: int
    rounds: int
    edges: int


class DTSquare:
    """One run of the protocol over ``n**2`` points in ``n`` batches."""

    def __init__(self, sim: CongestedClique, batches, bits, *,
                 threshold_factor=THRESHOLD_FACTOR, active_factor=ACTIVE_FACTOR,
                 check_invariants=True):
        n = sim.n
        if len(batches) != n or any(len(b) != n for b in batches):
            raise ValueError(f"expected {n} batches of {n} points")
        self.sim = sim
        self.n = n
        self.bits = bits
        self.threshold = threshold_factor * n
        self.active_bound = active_factor * n
        self.check_invariants = check_invariants
        scale = 1 << bits
        for b in batches:
            for p in b:
                if not (0 <= p[0] <= scale and 0 <= p[1] <= scale):
                    raise ValueError(f"point {tuple(p)} outside [0, 2**{bits}]^2")
        self.nodes = [NodeState(i, [Point(*p) for p in b]) for i, b in enumerate(batches)]
        self.level_stats: list[LevelStats] = []
        # observer-side records, never read by node code
        self.resolved_log = []
        self.split_log = []
        self.leaves_per_level = []
        self.active_bound_exceeded = False

    # -- phases ----------------------------------------------------------------

    def phase_prefix_and_sort(self, level):
        with self.sim.phase("prefix-sort"):
            keys = [[tuple(prefixed(p, level, self.bits)) for p in nd.points] for nd in self.nodes]
            out = self.sim.sort(keys)
            for nd, batch in zip(self.nodes, out):
                nd.held = [PrefixedPoint(*k) for k in batch]
                nd.points = [Point(k.x, k.y) for k in nd.held]
        with self.sim.phase("ranges"):
            ranges = self.sim.broadcast_scalar([(nd.held[0].num, nd.held[-1].num) for nd in self.nodes])
            for nd in self.nodes:
                nd.ranges = list(ranges)

    def phase_square_counts(self):
        with self.sim.phase("square-counts"):
            msgs = []
            for nd in self.nodes:
                local = Counter(k.num for k in nd.held)
                nd.counts = {}
                for num, c in local.items():
                    first = nd.holders(num)[0]
                    if first == nd.ident:
                        nd.counts[num] = c
                    else:
                        msgs.append(Message(nd.ident, first, (num, c)))
            for nd, inbox in zip(self.nodes, self.sim.route(msgs)):
                for m in inbox:
                    num, c = m.payload
                    nd.counts[num] = nd.counts.get(num, 0) + c

    def phase_tl_queries(self):
        """Every owner learns the count of each cell in the TL region of each
        of its active squares."""
        with self.sim.phase("tl-queries"):
            queries = []
            for nd in self.nodes:
                nd.cell_count = {}
                wanted = sorted({w.num for r in nd.active for w in tl_region(r)})
                for num in wanted:
                    hs = nd.holders(num)
                    if not hs:
                        nd.cell_count[num] = 0
                    elif hs[0] == nd.ident:
                        nd.cell_count[num] = nd.counts.get(num, 0)
                    else:
                        queries.append(Message(nd.ident, hs[0], (num,)))
            replies = []
            for nd, inbox in zip(self.nodes, self.sim.route_batched(queries)):
                for m in inbox:
                    num = m.payload[0]
                    replies.append(Message(nd.ident, m.src, (num, nd.counts.get(num, 0))))
            for nd, inbox in zip(self.nodes, self.sim.route_batched(replies)):
                for m in inbox:
                    num, c = m.payload
                    nd.cell_count[num] = c

    def phase_resolve_or_split(self, level):
        """Small TL regions are solved locally, large ones split into four."""
        resolving = [[] for _ in range(self.n)]
        next_active = [[] for _ in range(self.n)]
        for nd in self.nodes:
            for r in nd.active:
                total = sum(nd.cell_count[w.num] for w in tl_region(r))
                if total <= self.threshold:
                    if nd.cell_count[r.num] == 0:
                        raise ProtocolError(
                            "empty-square",
                            f"square {tuple(r)} resolves with no points; input is not smooth")
                    resolving[nd.ident].append(r)
                    self.resolved_log.append((r, nd.ident, total))
                else:
                    next_active[nd.ident].extend(children(r))
                    self.split_log.append((r, nd.ident, total))

        with self.sim.phase("fetch-points"):
            requests = []
            requesters = defaultdict(set)
            for nd in self.nodes:
                wanted = sorted({w.num for r in resolving[nd.ident] for w in tl_region(r)})
                for num in wanted:
                    for j in nd.holders(num):
                        if j != nd.ident:
                            requests.append(Message(nd.ident, j, (num,)))
            answers = []
            for nd, inbox in zip(self.nodes, self.sim.route_batched(requests)):
                for m in inbox:
                    num = m.payload[0]
                    requesters[(nd.ident, num)].add(m.src)
                    if len(requesters[(nd.ident, num)]) > MAX_REQUESTERS:
                        raise ProtocolError("inconsistency",
                                            f"cell {num} requested by more than {MAX_REQUESTERS} owners")
                    for k in nd.held:
                        if k.num == num:
                            answers.append(Message(nd.ident, m.src, (k.x, k.y)))
            received = self.sim.route_batched(answers)

        for nd in self.nodes:
            if not resolving[nd.ident]:
                continue
            wanted = {w.num for r in resolving[nd.ident] for w in tl_region(r)}
            pool = {Point(k.x, k.y): k.num for k in nd.held if k.num in wanted}
            for m in received[nd.ident]:
                p = Point(*m.payload)
                pool[p] = prefixed(p, level, self.bits).num
            for r in resolving[nd.ident]:
                tl = {w.num for w in tl_region(r)}
                pts = [p for p, num in pool.items() if num in tl]
                nd.edges.extend(dual_edges_within_square(pts, square_extent(r, self.bits)))
        for nd in self.nodes:
            nd.active = next_active[nd.ident]
        return sum(len(r) for r in resolving)

    def phase_balance(self, level):
        """Spread the new active squares (all on ``level``) so that each node
        owns at most ceil(A/n) of them.  Returns A."""
        with self.sim.phase("balance"):
            sizes = self.sim.broadcast_scalar([len(nd.active) for nd in self.nodes])
            total = sum(sizes)
            base, extra = divmod(total, self.n)
            cut = extra * (base + 1)

            def target(g):
                # the first `extra` nodes take one square more
                if g < cut:
                    return g // (base + 1)
                return extra + (g - cut) // base

            moves = []
            offset = 0
            for nd, size in zip(self.nodes, sizes):
                keep = []
                for k, sq in enumerate(sorted(nd.active, key=lambda s: s.num)):
                    t = target(offset + k)
                    if t == nd.ident:
                        keep.append(sq)
                    else:
                        moves.append(Message(nd.ident, t, (sq.num,)))
                offset += size
                nd.active = keep
            if moves:
                for nd, inbox in zip(self.nodes, self.sim.route_batched(moves)):
                    nd.active.extend(GridSquareId(level, m.payload[0]) for m in inbox)
                    nd.active.sort(key=lambda s: s.num)
        return total

    def phase_dedup(self):
        """Remove duplicate edges from the distributed list and rebalance it."""
        with self.sim.phase("dedup"):
            for nd in self.nodes:
                nd.edges = sorted(set(nd.edges))
            sizes = self.sim.broadcast_scalar([len(nd.edges) for nd in self.nodes])
            if sum(sizes) == 0:
                return 0
            slots = max(1, ceil(max(sizes) / self.n))
            keys = [[(e.u.x, e.u.y, e.v.x, e.v.y, nd.ident) for e in nd.edges] for nd in self.nodes]
            out = self.sim.sort(keys, slots=slots)
            for nd, batch in zip(self.nodes, out):
                kept = []
                for k in batch:
                    e = k[:4]
                    if not kept or kept[-1] != e:
                        kept.append(e)
                nd.edges = kept
            # a run of equal edges may straddle a node boundary
            outboxes = [[] for _ in range(self.n)]
            for nd in self.nodes[:-1]:
                if nd.edges:
                    outboxes[nd.ident].append(Message(nd.ident, nd.ident + 1, nd.edges[-1]))
            for nd, inbox in zip(self.nodes, self.sim.direct_round(outboxes)):
                for m in inbox:
                    if nd.edges and nd.edges[0] == m.payload:
                        nd.edges.pop(0)
            sizes = self.sim.broadcast_scalar([len(nd.edges) for nd in self.nodes])
            total = sum(sizes)
            per = max(1, ceil(total / self.n))
            moves = []
            offset = 0
            for nd, size in zip(self.nodes, sizes):
                stay = []
                for k, e in enumerate(nd.edges):
                    t = (offset + k) // per
                    if t == nd.ident:
                        stay.append(e)
                    else:
                        moves.append(Message(nd.ident, t, e))
                offset += size
                nd.edges = stay
            if moves:
                for nd, inbox in zip(self.nodes, self.sim.route_batched(moves)):
                    nd.edges.extend(m.payload for m in inbox)
            for nd in self.nodes:
                nd.edges = sorted(make_edge(Point(e[0], e[1]), Point(e[2], e[3])) for e in nd.edges)
            return total

    # -- observer checks ---------------------------------------------------------

    def _check_partition(self):
        """Resolved squares plus the current active ones tile the unit square."""
        leaves = [r for r, _, _ in self.resolved_log]
        for nd in self.nodes:
            leaves.extend(nd.active)
        seen = set(leaves)
        if len(seen) != len(leaves):
            raise ProtocolError("inconsistency", "a square is owned twice")
        area = sum((Fraction(1, 4 ** s.level) for s in leaves), Fraction(0))
        if area != 1:
            raise ProtocolError("inconsistency", f"squares cover area {area}, not 1")
        for s in leaves:
            a = s
            while a.level > 0:
                a = a.parent()
                if a in seen:
                    raise ProtocolError("inconsistency", f"squares {tuple(s)} and {tuple(a)} overlap")

    def _check_resolution(self):
        """Every resolved square below the root has a parent that was split
        because its TL region was too full."""
        split = {sq: total for sq, _, total in self.split_log}
        for sq, _, total in self.resolved_log:
            if total > self.threshold:
                raise ProtocolError("inconsistency", f"square {tuple(sq)} resolved with TL count {total}")
            if sq.level > 0 and split.get(sq.parent(), -1) <= self.threshold:
                raise ProtocolError("inconsistency", f"parent of {tuple(sq)} was never split")

    # -- driver -------------------------------------------------------------------

    def run(self):
        """Run the level loop; returns the deduplicated edge batches."""
        self.nodes[0].active = [GridSquareId(0, 0)]
        level = 0
        while True:
            if level > self.bits:
                raise ProtocolError("depth", f"recursion passed level {self.bits}; input is not smooth")
            start = self.sim.ledger.rounds
            active = sum(len(nd.active) for nd in self.nodes)
            if active > self.active_bound:
                self.active_bound_exceeded = True
            self.phase_prefix_and_sort(level)
            self.phase_square_counts()
            self.phase_tl_queries()
            resolved = self.phase_resolve_or_split(level)
            self.leaves_per_level.append(
                [r for r, _, _ in self.resolved_log] + [s for nd in self.nodes for s in nd.active])
            if self.check_invariants:
                self._check_partition()
            remaining = self.phase_balance(level + 1)
            edges = self.phase_dedup()
            self.level_stats.append(LevelStats(level, active, resolved, active - resolved,
                                               self.sim.ledger.rounds - start, edges))
            if remaining == 0:
                break
            level += 1
        if self.check_invariants:
            self._check_resolution()
        return [list(nd.edges) for nd in self.nodes]


# --- Voronoi regions from the distributed edge list ------------------------------------

def _angle_cmp(a, b):
    if a[:2] != b[:2]:
        return -1 if a[:2] < b[:2] else 1
    return compare_directions(a[2:], b[2:])


def voronoi_from_delaunay(sim: CongestedClique, edge_batches, num_sites, bits):
    """Each site's clipped region, held by the smallest node that received
    one of the site's edges after an angular sort.

    Returns ``(regions, max_degree)`` with ``regions[i]`` a dict
    site -> VoronoiRegion for node i.
    """
    n = sim.n
    scale = 1 << bits
    box = Box(0, 0, scale, scale)
    with sim.phase("regions-sort"):
        doubled = []
        for batch in edge_batches:
            keys = []
            for e in batch:
                u, v = e
                keys.append((u[0], u[1], v[0] - u[0], v[1] - u[1]))
                keys.append((v[0], v[1], u[0] - v[0], u[1] - v[1]))
            doubled.append(keys)
        sizes = sim.broadcast_scalar([len(k) for k in doubled])
        if sum(sizes) > 6 * num_sites:
            raise ProtocolError("inconsistency",
                                f"{sum(sizes)} doubled edges for {num_sites} sites exceeds 6N")
        slots = max(1, ceil(max(sizes) / n)) if sizes else 1
        out = sim.sort(doubled, slots=slots, cmp=_angle_cmp)
    with sim.phase("regions-stitch"):
        table = sim.broadcast_scalar([(b[0][0], b[0][1], b[-1][0], b[-1][1]) if b else ()
                                      for b in out])
        moves = []
        local = [list(b) for b in out]
        for i, b in enumerate(out):
            if not b:
                continue
            site = b[0][:2]
            owner = i
            while owner > 0 and table[owner - 1] and tuple(table[owner - 1][2:]) == site:
                owner -= 1
            if owner != i:
                for k in b:
                    if k[:2] == site:
                        moves.append(Message(i, owner, k))
                local[i] = [k for k in b if k[:2] != site]
        if moves:
            for i, inbox in enumerate(sim.route_batched(moves)):
                local[i].extend(m.payload for m in inbox)
    regions = []
    max_degree = 0
    for i in range(n):
        keys = sorted(local[i], key=cmp_to_key(_angle_cmp))
        groups = defaultdict(list)
        for k in keys:
            groups[Point(k[0], k[1])].append(Point(k[0] + k[2], k[1] + k[3]))
        mine = {}
        for site, nbrs in groups.items():
            max_degree = max(max_degree, len(nbrs))
            try:
                mine[site] = walk_region(site, nbrs, box)
            except RegionError as exc:
                raise ProtocolError("inconsistency", str(exc)) from exc
        regions.append(mine)
    with sim.phase("regions-count"):
        counts = sim.broadcast_scalar([len(r) for r in regions])
    if num_sites > 1 and sum(counts) != num_sites:
        raise ProtocolError("inconsistency",
                            f"{sum(counts)} regions rebuilt for {num_sites} sites")
    return regions, max_degree


# --- entry point ------------------------------------------------------------------------

@dataclass
class RunResult:
    edges: list            # per-node edge batches
    regions: Optional[list]
    report: object
    stats: list
    leaves_per_level: list = field(default_factory=list)

    def all_edges(self):
        return sorted(e for b in self.edges for e in b)

    def all_regions(self):
        out = {}
        for r in self.regions or []:
            out.update(r)
        return out


def distribute(points, n):
    pts = [Point(*p) for p in points]
    if len(pts) != n * n:
        raise ValueError(f"expected n**2 = {n * n} points, got {len(pts)}")
    if len(set(pts)) != len(pts):
        raise ValueError("duplicate points")
    return [pts[i * n:(i + 1) * n] for i in range(n)]


def dt_square(points, n, bits, *, cmsg=None, r_route=4, r_sort=6,
              threshold_factor=THRESHOLD_FACTOR, active_factor=ACTIVE_FACTOR, regions=True,
              check_invariants=True, protocol_cls=DTSquare, sim=None) -> RunResult:
    """Run the protocol on ``n**2`` points given as numerators over ``2**bits``."""
    if sim is None:
        if cmsg is None:
            cmsg = auto_cmsg(bits, n)
        sim = CongestedClique(n, cmsg=cmsg, r_route=r_route, r_sort=r_sort)
    proto = protocol_cls(sim, distribute(points, n), bits,
                         threshold_factor=threshold_factor, active_factor=active_factor,
                         check_invariants=check_invariants)
    edges = proto.run()
    loop_rounds = sim.ledger.rounds
    regs, degree = (None, 0)
    if regions:
        regs, degree = voronoi_from_delaunay(sim, edges, n * n, bits)
    report = sim.run_report()
    report.levels_used = len(proto.level_stats)
    report.active_per_level = [s.active for s in proto.level_stats]
    report.resolved_per_level = [s.resolved for s in proto.level_stats]
    report.rounds_per_level = [s.rounds for s in proto.level_stats]
    report.fixed_rounds = report.rounds - sum(report.rounds_per_level)
    report.max_site_degree = degree
    report.loop_rounds = loop_rounds
    report.active_bound_exceeded = proto.active_bound_exceeded
    report.threshold = proto.threshold
    return RunResult(edges, regs, report, proto.level_stats, proto.leaves_per_level)
