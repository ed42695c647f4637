"""Exact planar predicates and the basic geometric value types.

Coordinates are integers (numerators over a shared power-of-two
denominator) or ``Fraction`` values; every predicate works on either and
never rounds.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from math import gcd
from typing import NamedTuple, Union

Number = Union[int, Fraction]


class Point(NamedTuple):
    x: int
    y: int


class Edge(NamedTuple):
    """Undirected Delaunay edge with ``u < v`` lexicographically."""

    u: Point
    v: Point


class Bisector(NamedTuple):
    """Line ``a*x + b*y = c``; the first site satisfies ``a*x + b*y < c``."""

    a: int
    b: int
    c: int


class Box(NamedTuple):
    """Closed axis-aligned rectangle."""

    x0: Number
    y0: Number
    x1: Number
    y1: Number

    def contains(self, p) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1

    @property
    def area(self) -> Number:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


class Orientation(enum.IntEnum):
    CW = -1
    COLLINEAR = 0
    CCW = 1


class Circle(enum.IntEnum):
    OUTSIDE = -1
    COCIRCULAR = 0
    INSIDE = 1


class GeometryError(ValueError):
    pass


class DegenerateTriangleError(GeometryError):
    """Raised when a circle predicate is asked about three collinear points."""


class GeneralPositionError(GeometryError):
    """Input has three collinear or four cocircular points.

    ``witness`` holds the offending points.
    """

    def __init__(self, message, witness=()):
        super().__init__(message)
        self.witness = tuple(witness)


def make_edge(u, v) -> Edge:
    if u == v:
        raise GeometryError(f"degenerate edge at {u}")
    return Edge(u, v) if u < v else Edge(v, u)


def orient2d(p, q, r) -> Number:
    """Twice the signed area of triangle pqr."""
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def orientation(p, q, r) -> Orientation:
    d = orient2d(p, q, r)
    return Orientation((d > 0) - (d < 0))


def incircle_det(a, b, c, d) -> Number:
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    return (alift * (bdx * cdy - cdx * bdy)
            + blift * (cdx * ady - adx * cdy)
            + clift * (adx * bdy - bdx * ady))


def in_circle(a, b, c, d) -> Circle:
    """Position of ``d`` relative to the circle through ``a, b, c``.

    The sign is corrected for the orientation of ``abc`` so callers need
    not pass the triangle counterclockwise.
    """
    o = orient2d(a, b, c)
    if o == 0:
        raise DegenerateTriangleError(f"collinear triangle {a}, {b}, {c}")
    det = incircle_det(a, b, c, d)
    if o < 0:
        det = -det
    return Circle((det > 0) - (det < 0))


def bisector(u, v) -> Bisector:
    """Perpendicular bisector of ``uv`` with gcd-reduced integer coefficients."""
    if u == v:
        raise GeometryError(f"bisector of coincident points {u}")
    a = 2 * (v[0] - u[0])
    b = 2 * (v[1] - u[1])
    c = v[0] * v[0] + v[1] * v[1] - u[0] * u[0] - u[1] * u[1]
    if all(isinstance(t, int) for t in (a, b, c)):
        g = gcd(gcd(a, b), c)
        if g > 1:
            a, b, c = a // g, b // g, c // g
    return Bisector(a, b, c)


def line_intersection(l1, l2):
    """Intersection point of two lines ``a*x + b*y = c``, or None if parallel."""
    det = l1[0] * l2[1] - l1[1] * l2[0]
    if det == 0:
        return None
    x = Fraction(l1[2] * l2[1] - l1[1] * l2[2]) / det
    y = Fraction(l1[0] * l2[2] - l1[2] * l2[0]) / det
    return (x, y)


def circumcenter(a, b, c):
    """Exact circumcenter; raises on collinear input."""
    center = line_intersection(bisector(a, b), bisector(a, c))
    if center is None:
        raise DegenerateTriangleError(f"collinear triangle {a}, {b}, {c}")
    return center


def dist2(p, q) -> Number:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return dx * dx + dy * dy
