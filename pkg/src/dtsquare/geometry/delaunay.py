"""Sequential Delaunay triangulation used as the verification oracle."""

from __future__ import annotations

from itertools import combinations
from math import gcd

from .predicates import (
    Circle,
    GeneralPositionError,
    GeometryError,
    in_circle,
    incircle_det,
    make_edge,
    orient2d,
)

# Quadruple-exhaustive cocircularity is quartic; above this size only the
# Delaunay-relevant quadruples are checked.
FULL_CHECK_LIMIT = 40


def find_collinear_triple(points):
    """Return some collinear triple of ``points`` or None.

    For each point the reduced directions to all later points are hashed,
    so two later points sharing a direction give a witness.
    """
    pts = sorted(points)
    for i, p in enumerate(pts):
        seen = {}
        for q in pts[i + 1:]:
            dx, dy = q[0] - p[0], q[1] - p[1]
            g = gcd(dx, dy)
            key = (dx // g, dy // g)
            if key in seen:
                return (p, seen[key], q)
            seen[key] = q
    return None


def find_cocircular_quadruple(points):
    for a, b, c in combinations(points, 3):
        if orient2d(a, b, c) == 0:
            continue
        for d in points:
            if d in (a, b, c):
                continue
            if incircle_det(a, b, c, d) == 0 and d > max(a, b, c):
                return (a, b, c, d)
    return None


def validate_general_position(points, full_limit=FULL_CHECK_LIMIT):
    """Raise GeneralPositionError unless ``points`` is in general position.

    Collinearity is always checked exhaustively.  Cocircularity is checked
    over all quadruples for small inputs; for larger ones only quadruples
    formed by a Delaunay triangle and another site are examined, which is
    exactly the degeneracy that makes the triangulation non-unique.
    """
    pts = list(points)
    if len(set(pts)) != len(pts):
        seen = set()
        dup = next(p for p in pts if p in seen or seen.add(p))
        raise GeneralPositionError(f"duplicate point {dup}", (dup,))
    triple = find_collinear_triple(pts)
    if triple is not None:
        raise GeneralPositionError(f"collinear points {triple}", triple)
    if len(pts) <= full_limit:
        quad = find_cocircular_quadruple(pts)
        if quad is not None:
            raise GeneralPositionError(f"cocircular points {quad}", quad)
        return
    for a, b, c in delaunay_triangles(pts):
        for d in pts:
            if d not in (a, b, c) and incircle_det(a, b, c, d) == 0:
                raise GeneralPositionError(
                    f"cocircular points {(a, b, c, d)}", (a, b, c, d))


def delaunay_brute_force(points):
    """Delaunay edges by testing every triangle's circumcircle.

    Quartic; the reference the faster triangulation is checked against.
    """
    pts = sorted(set(points))
    if len(pts) < 2:
        return set()
    if len(pts) == 2:
        return {make_edge(*pts)}
    edges = set()
    for a, b, c in combinations(pts, 3):
        if orient2d(a, b, c) == 0:
            raise GeneralPositionError(f"collinear points {(a, b, c)}", (a, b, c))
        empty = True
        for d in pts:
            if d in (a, b, c):
                continue
            side = in_circle(a, b, c, d)
            if side == Circle.COCIRCULAR:
                raise GeneralPositionError(
                    f"cocircular points {(a, b, c, d)}", (a, b, c, d))
            if side == Circle.INSIDE:
                empty = False
                break
        if empty:
            edges.update((make_edge(a, b), make_edge(b, c), make_edge(a, c)))
    return edges


def _triangulate(pts):
    """Bowyer-Watson over ``pts`` plus three far-away helper vertices.

    Returns CCW index triangles; indices >= len(pts) are helper vertices.
    The helpers sit beyond every circumcircle an integer triangle inside
    the bounding box can have (radius is at most ~ diameter**3), which
    makes the real part of the result the Delaunay triangulation.
    """
    n = len(pts)
    lo = min(min(p[0] for p in pts), min(p[1] for p in pts))
    hi = max(max(p[0] for p in pts), max(p[1] for p in pts))
    span = max(1, hi - lo)
    far = 64 * (span + 1) ** 3 + abs(lo) + abs(hi)
    verts = list(pts) + [(-far, -far), (3 * far, -far), (-far, 3 * far)]
    real = lambda i: i < n  # noqa: E731

    tris = {(n, n + 1, n + 2)}
    for i in range(n):
        p = verts[i]
        bad = []
        for t in tris:
            det = incircle_det(verts[t[0]], verts[t[1]], verts[t[2]], p)
            if det > 0:
                bad.append(t)
            elif det == 0 and all(real(k) for k in t):
                quad = tuple(verts[k] for k in t) + (p,)
                raise GeneralPositionError(f"cocircular points {quad}", quad)
        count = {}
        for t in bad:
            tris.discard(t)
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                key = frozenset(e)
                count[key] = count.get(key, 0) + 1
        for t in bad:
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                if count[frozenset((a, b))] != 1:
                    continue
                o = orient2d(verts[a], verts[b], p)
                if o <= 0:
                    if o == 0 and real(a) and real(b):
                        trip = (verts[a], verts[b], p)
                        raise GeneralPositionError(f"collinear points {trip}", trip)
                    raise GeometryError("triangulation cavity is not star-shaped")
                tris.add((a, b, i))
    return verts, tris


def delaunay_triangles(points):
    """Real Delaunay triangles as CCW point triples."""
    pts = sorted(set(points))
    if len(pts) < 3:
        return []
    verts, tris = _triangulate(pts)
    n = len(pts)
    return [tuple(verts[k] for k in t) for t in tris if max(t) < n]


def delaunay_oracle(points):
    """The Delaunay edge set of ``points`` (general position required)."""
    pts = sorted(set(points))
    if len(pts) < 2:
        return set()
    if len(pts) == 2:
        return {make_edge(*pts)}
    triple = find_collinear_triple(pts)
    if triple is not None:
        raise GeneralPositionError(f"collinear points {triple}", triple)
    verts, tris = _triangulate(pts)
    n = len(pts)
    edges = set()
    for t in tris:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            if a < n and b < n:
                edges.add(make_edge(verts[a], verts[b]))
    return edges


def delaunay_adjacency(points):
    """Map each Delaunay edge to the third vertices of its two triangles.

    The tuple is ``(left, right)`` relative to the directed edge ``u -> v``;
    an entry is None where the edge is on the convex hull.
    """
    pts = sorted(set(points))
    if len(pts) < 3:
        if len(pts) == 2:
            return {make_edge(*pts): (None, None)}
        return {}
    triple = find_collinear_triple(pts)
    if triple is not None:
        raise GeneralPositionError(f"collinear points {triple}", triple)
    verts, tris = _triangulate(pts)
    n = len(pts)
    adj = {}
    for t in tris:
        for a, b, c in ((t[0], t[1], t[2]), (t[1], t[2], t[0]), (t[2], t[0], t[1])):
            if a >= n or b >= n:
                continue
            e = make_edge(verts[a], verts[b])
            left, right = adj.get(e, (None, None))
            third = verts[c] if c < n else None
            # triangle (a, b, c) is CCW, so c is left of a -> b
            if e.u == verts[a]:
                left = third
            else:
                right = third
            adj[e] = (left, right)
    return adj


if __name__ == "__main__":
    import random

    rng = random.Random(3)
    sample = [(rng.randrange(1 << 16), rng.randrange(1 << 16)) for _ in range(30)]
    assert delaunay_oracle(sample) == delaunay_brute_force(sample)
    print(len(delaunay_oracle(sample)), "edges")
