"""Voronoi cells clipped to axis-aligned squares, in exact arithmetic.

Two independent routes to the dual edges inside a square live here:

* ``dual_edges_within_square`` clips the square by bisector half-planes
  site by site (what a clique node runs locally);
* ``voronoi_in_square_oracle`` takes the Delaunay triangulation, builds
  each Voronoi edge from the circumcenters of its two triangles and
  intersects it with the square.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .delaunay import delaunay_adjacency, find_collinear_triple
from .predicates import (
    Box,
    GeneralPositionError,
    Point,
    bisector,
    circumcenter,
    dist2,
    make_edge,
    orient2d,
)

PERIMETER = None


@dataclass(frozen=True)
class VoronoiRegion:
    """A site's cell clipped to a square, as a labelled CCW polygon.

    ``arcs[k]`` labels the side from ``vertices[k]`` to ``vertices[k+1]``:
    the opposing site for a bisector segment, ``None`` for a piece of the
    square's boundary.  Vertices are exact rationals; the cycle starts at
    the lexicographically smallest vertex and carries no repeated or
    redundant collinear vertices.
    """

    site: tuple
    vertices: tuple
    arcs: tuple

    @property
    def area(self) -> Fraction:
        return polygon_area(self.vertices)

    def neighbors(self):
        return {a for a in self.arcs if a is not PERIMETER}

    def perimeter_fragments(self):
        """Maximal runs of boundary sides, each as its vertex chain."""
        m = len(self.vertices)
        if all(a is PERIMETER for a in self.arcs):
            return [list(self.vertices) + [self.vertices[0]]]
        start = next(k for k in range(m) if self.arcs[k] is not PERIMETER)
        frags, cur = [], None
        for step in range(1, m + 1):
            k = (start + step) % m
            if self.arcs[k] is PERIMETER:
                if cur is None:
                    cur = [self.vertices[k]]
                cur.append(self.vertices[(k + 1) % m])
            elif cur is not None:
                frags.append(cur)
                cur = None
        if cur is not None:
            frags.append(cur)
        return frags


def polygon_area(vertices) -> Fraction:
    s = 0
    m = len(vertices)
    for k in range(m):
        x0, y0 = vertices[k]
        x1, y1 = vertices[(k + 1) % m]
        s += x0 * y1 - x1 * y0
    return Fraction(s) / 2


def _as_fraction(p):
    return (Fraction(p[0]), Fraction(p[1]))


def box_polygon(box: Box):
    """Counterclockwise corners of ``box`` with boundary labels."""
    corners = [(box.x0, box.y0), (box.x1, box.y0), (box.x1, box.y1), (box.x0, box.y1)]
    return [(_as_fraction(c), PERIMETER) for c in corners]


def clip(poly, line, label):
    """Clip a labelled convex polygon to the closed half-plane ``a*x+b*y <= c``.

    ``poly`` is a list of ``(vertex, label)`` pairs where the label belongs
    to the side leaving that vertex.  Sides lying on the clip line take the
    new label, so a bisector running along the square's boundary is still
    reported.
    """
    a, b, c = line
    vals = [a * p[0] + b * p[1] - c for p, _ in poly]
    if all(v <= 0 for v in vals) and not any(
            vals[k] == 0 and vals[(k + 1) % len(poly)] == 0 for k in range(len(poly))):
        return poly
    out = []
    m = len(poly)
    for k in range(m):
        (p, lab), vp = poly[k], vals[k]
        q, vq = poly[(k + 1) % m][0], vals[(k + 1) % m]
        if vp <= 0:
            out.append((p, label if vp == 0 and vq == 0 else lab))
            if vq > 0:
                if vp < 0:
                    t = vp / (vp - vq)
                    out.append(((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])), label))
                else:
                    out[-1] = (p, label)
        elif vq < 0:
            t = vp / (vp - vq)
            out.append(((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])), lab))
    return out


def canonical_cycle(poly):
    """Drop zero-length sides and redundant collinear vertices, rotate to the
    smallest vertex.  Returns None for a polygon without area."""
    cyc = list(poly)
    # a zero-length side keeps the label of the side after it
    changed = True
    while changed and cyc:
        changed = False
        for k in range(len(cyc)):
            if len(cyc) > 1 and cyc[k][0] == cyc[(k + 1) % len(cyc)][0]:
                del cyc[k]
                changed = True
                break
    changed = True
    while changed and len(cyc) >= 3:
        changed = False
        m = len(cyc)
        for k in range(m):
            prev_p, prev_lab = cyc[k - 1]
            p, lab = cyc[k]
            nxt = cyc[(k + 1) % m][0]
            if lab == prev_lab and orient2d(prev_p, p, nxt) == 0:
                del cyc[k]
                changed = True
                break
    if len(cyc) < 3 or polygon_area([p for p, _ in cyc]) <= 0:
        return None
    k0 = min(range(len(cyc)), key=lambda k: cyc[k][0])
    cyc = cyc[k0:] + cyc[:k0]
    return cyc


def make_region(site, cycle) -> VoronoiRegion:
    return VoronoiRegion(
        site=site,
        vertices=tuple(p for p, _ in cycle),
        arcs=tuple(lab for _, lab in cycle),
    )


def clipped_cell(site, others, box: Box):
    """Cell of ``site`` among ``others`` intersected with ``box``.

    Sites are visited nearest first; once the next site is at least twice
    as far as the farthest cell vertex its bisector cannot cut the cell,
    and neither can any later one.
    """
    poly = box_polygon(box)
    ordered = sorted((dist2(site, o), o) for o in others if o != site)
    for d2, other in ordered:
        reach = max(dist2(site, p) for p, _ in poly)
        if d2 >= 4 * reach:
            break
        poly = clip(poly, bisector(site, other), other)
        if not poly:
            return None
    return canonical_cycle(poly)


def clipped_regions(points, box: Box):
    """All nonempty cells of ``points`` clipped to ``box``, keyed by site."""
    pts = sorted(set(points))
    regions = {}
    for s in pts:
        cyc = clipped_cell(s, pts, box)
        if cyc is not None:
            regions[s] = make_region(s, cyc)
    return regions


def dual_edges_within_square(points, box: Box):
    """Delaunay edges whose bisector bounds some cell inside the closed box
    along a piece of positive length."""
    edges = set()
    for site, region in clipped_regions(points, box).items():
        for other in region.neighbors():
            edges.add(make_edge(Point(*site), Point(*other)))
    return edges


# --- oracle route: Voronoi edges from Delaunay circumcenters -------------

def _clip_param(origin, direction, box: Box, lo, hi):
    """Liang-Barsky: restrict ``origin + t*direction`` for t in [lo, hi]
    (either may be None for unbounded) to the closed box."""
    for o, d, mn, mx in ((origin[0], direction[0], box.x0, box.x1),
                         (origin[1], direction[1], box.y0, box.y1)):
        if d == 0:
            if o < mn or o > mx:
                return None
            continue
        t0 = Fraction(mn - o) / d
        t1 = Fraction(mx - o) / d
        if t0 > t1:
            t0, t1 = t1, t0
        lo = t0 if lo is None else max(lo, t0)
        hi = t1 if hi is None else min(hi, t1)
    if lo is None or hi is None or lo > hi:
        return None
    return lo, hi


def voronoi_edge_hits_box(u, v, left, right, box: Box) -> bool:
    """Whether the Voronoi edge dual to Delaunay edge ``uv`` meets ``box``
    in a piece of positive length.

    ``left``/``right`` are the third vertices of the triangles on either
    side of ``u -> v`` (None on the hull).
    """
    # direction along the bisector, pointing to the left of u -> v
    direction = (-(v[1] - u[1]), v[0] - u[0])
    if left is not None and right is not None:
        cl = circumcenter(u, v, left)
        cr = circumcenter(u, v, right)
        seg = (cl[0] - cr[0], cl[1] - cr[1])
        if seg == (0, 0):
            raise GeneralPositionError(
                f"cocircular points {(u, v, left, right)}", (u, v, left, right))
        res = _clip_param(cr, seg, box, Fraction(0), Fraction(1))
    elif left is not None:
        # hull edge with the triangle on the left: ray leaves to the right
        c = circumcenter(u, v, left)
        res = _clip_param(c, (-direction[0], -direction[1]), box, Fraction(0), None)
    elif right is not None:
        c = circumcenter(u, v, right)
        res = _clip_param(c, direction, box, Fraction(0), None)
    else:
        mid = (Fraction(u[0] + v[0], 2), Fraction(u[1] + v[1], 2))
        res = _clip_param(mid, direction, box, None, None)
    return res is not None and res[1] > res[0]


def oracle_dual_edges(points, box: Box, adjacency=None):
    adj = delaunay_adjacency(points) if adjacency is None else adjacency
    return {e for e, (left, right) in adj.items()
            if voronoi_edge_hits_box(e.u, e.v, left, right, box)}


@dataclass
class SquareDiagram:
    regions: dict
    dual_edges: set


def voronoi_in_square_oracle(points, box: Box, adjacency=None) -> SquareDiagram:
    """Clipped regions of every site meeting ``box`` plus the dual edges
    whose Voronoi edge crosses ``box`` with positive length."""
    pts = sorted(set(points))
    if len(pts) >= 3:
        triple = find_collinear_triple(pts)
        if triple is not None:
            raise GeneralPositionError(f"collinear points {triple}", triple)
    return SquareDiagram(
        regions=clipped_regions(pts, box),
        dual_edges=oracle_dual_edges(pts, box, adjacency),
    )


def region_from_neighbors(site, neighbors, box: Box) -> Optional[VoronoiRegion]:
    """Clip ``box`` by the bisectors of ``site`` with the given neighbors only."""
    poly = box_polygon(box)
    for other in neighbors:
        poly = clip(poly, bisector(site, other), other)
        if not poly:
            return None
    cyc = canonical_cycle(poly)
    return None if cyc is None else make_region(site, cyc)
