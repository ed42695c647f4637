"""Rebuilding a site's clipped Voronoi region from its angularly sorted
Delaunay neighbours."""

from __future__ import annotations

from fractions import Fraction

from ..geometry.predicates import Box, bisector, line_intersection
from ..geometry.voronoi import PERIMETER, VoronoiRegion, _clip_param, box_polygon, canonical_cycle, make_region


class RegionError(RuntimeError):
    pass


def quadrant(dx, dy) -> int:
    """0..3 counterclockwise, starting with the ray along +x."""
    if dx > 0 and dy >= 0:
        return 0
    if dx <= 0 and dy > 0:
        return 1
    if dx < 0 and dy <= 0:
        return 2
    return 3


def compare_directions(a, b) -> int:
    """Counterclockwise order of nonzero integer directions from +x,
    by quadrant and then the sign of the cross product."""
    qa, qb = quadrant(*a), quadrant(*b)
    if qa != qb:
        return -1 if qa < qb else 1
    cross = a[0] * b[1] - a[1] * b[0]
    if cross > 0:
        return -1
    if cross < 0:
        return 1
    return 0


def _perimeter_pos(p, box: Box):
    """Counterclockwise arclength position of a boundary point, from (x0, y0)."""
    w = box.x1 - box.x0
    h = box.y1 - box.y0
    x, y = p
    if y == box.y0 and x < box.x1:
        return x - box.x0
    if x == box.x1 and y < box.y1:
        return w + (y - box.y0)
    if y == box.y1 and x > box.x0:
        return w + h + (box.x1 - x)
    return 2 * w + h + (box.y1 - y)


def perimeter_between(start, end, box: Box):
    """Corners of ``box`` met when walking its boundary counterclockwise
    strictly between two boundary points."""
    total = 2 * (box.x1 - box.x0) + 2 * (box.y1 - box.y0)
    s0 = _perimeter_pos(start, box)
    span = (_perimeter_pos(end, box) - s0) % total
    corners = [(box.x0, box.y0), (box.x1, box.y0), (box.x1, box.y1), (box.x0, box.y1)]
    keyed = []
    for c in corners:
        d = (_perimeter_pos(c, box) - s0) % total
        if 0 < d < span:
            keyed.append((d, (Fraction(c[0]), Fraction(c[1]))))
    return [c for _, c in sorted(keyed)]


def _line_ends(site, other, box: Box):
    """Entry and exit points of the bisector of ``site``/``other`` through the
    box, oriented so the site's side is on the left."""
    nx, ny = other[0] - site[0], other[1] - site[1]
    mid = (Fraction(site[0] + other[0], 2), Fraction(site[1] + other[1], 2))
    direction = (-ny, nx)
    span = _clip_param(mid, direction, box, None, None)
    if span is None or span[0] == span[1]:
        raise RegionError(f"bisector of {site} and {other} misses the square")
    lo, hi = span
    entry = (mid[0] + lo * direction[0], mid[1] + lo * direction[1])
    exit_ = (mid[0] + hi * direction[0], mid[1] + hi * direction[1])
    return entry, exit_


def walk_region(site, neighbors, box: Box) -> VoronoiRegion:
    """Region of ``site`` inside ``box`` given every neighbour whose shared
    boundary crosses the box, in counterclockwise order.

    Consecutive bisectors meet at a region vertex when their intersection
    lies in the box; otherwise the gap is closed by the box boundary between
    where the first bisector leaves and the second one enters.
    """
    k = len(neighbors)
    if k == 0:
        return make_region(site, canonical_cycle(box_polygon(box)))
    lines = [bisector(site, v) for v in neighbors]
    ends = [_line_ends(site, v, box) for v in neighbors]
    seq = []
    for j in range(k):
        nxt = (j + 1) % k
        a = (neighbors[j][0] - site[0], neighbors[j][1] - site[1])
        b = (neighbors[nxt][0] - site[0], neighbors[nxt][1] - site[1])
        corner = None
        if k > 1 and a[0] * b[1] - a[1] * b[0] > 0:
            corner = line_intersection(lines[j], lines[nxt])
            if corner is not None and not box.contains(corner):
                corner = None
        if corner is not None:
            seq.append((corner, neighbors[nxt]))
            continue
        leave = ends[j][1]
        enter = ends[nxt][0]
        seq.append((leave, PERIMETER))
        seq.extend((c, PERIMETER) for c in perimeter_between(leave, enter, box))
        seq.append((enter, neighbors[nxt]))
    cyc = canonical_cycle(seq)
    if cyc is None:
        raise RegionError(f"region of {site} collapsed")
    return make_region(site, cyc)
