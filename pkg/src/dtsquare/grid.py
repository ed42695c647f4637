"""Dyadic grid hierarchy over the unit square.

Level ``i`` splits the unit square into ``2**i`` columns and rows.  Cells
are numbered column-wise, ``num = column * 2**i + row``, and are half-open
except along the top and right edges of the unit square, so every point
of the square falls in exactly one cell per level.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import NamedTuple

from .geometry.predicates import Box

# Squared gap bound in cell units: (4 * sqrt(2))**2.
SMOOTHNESS_GAP2 = 32
TL_RADIUS = 2


class GridSquareId(NamedTuple):
    level: int
    num: int

    @property
    def side(self) -> int:
        return 1 << self.level

    @property
    def column(self) -> int:
        return self.num >> self.level

    @property
    def row(self) -> int:
        return self.num & (self.side - 1)

    @classmethod
    def at(cls, level, column, row) -> "GridSquareId":
        return cls(level, (column << level) + row)

    def parent(self) -> "GridSquareId":
        if self.level == 0:
            raise ValueError("the unit square has no parent")
        return GridSquareId.at(self.level - 1, self.column >> 1, self.row >> 1)


class PrefixedPoint(NamedTuple):
    """Sort key of a point at some level: cell number, then coordinates."""

    num: int
    x: int
    y: int


def _cell_index(coord, level, bits):
    idx = (coord << level) >> bits
    return min(idx, (1 << level) - 1)


def square_number(p, level, bits) -> int:
    """Number of the level-``level`` cell holding ``p`` (numerators over 2**bits)."""
    scale = 1 << bits
    if not (0 <= p[0] <= scale and 0 <= p[1] <= scale):
        raise ValueError(f"point {tuple(p)} lies outside the unit square")
    return (_cell_index(p[0], level, bits) << level) + _cell_index(p[1], level, bits)


def prefixed(p, level, bits) -> PrefixedPoint:
    return PrefixedPoint(square_number(p, level, bits), p[0], p[1])


def square_extent(sq: GridSquareId, bits=None) -> Box:
    """Closed extent of ``sq``.

    With ``bits`` the corners are numerators over ``2**bits`` (integers
    whenever ``sq.level <= bits``); without, unit-square fractions.
    """
    c, r = sq.column, sq.row
    if bits is None:
        den = sq.side
        return Box(Fraction(c, den), Fraction(r, den), Fraction(c + 1, den), Fraction(r + 1, den))
    if sq.level <= bits:
        w = 1 << (bits - sq.level)
        return Box(c * w, r * w, (c + 1) * w, (r + 1) * w)
    den = 1 << (sq.level - bits)
    return Box(Fraction(c, den), Fraction(r, den), Fraction(c + 1, den), Fraction(r + 1, den))


def children(sq: GridSquareId):
    c, r = sq.column, sq.row
    lvl = sq.level + 1
    return [GridSquareId.at(lvl, 2 * c + dc, 2 * r + dr) for dc in (0, 1) for dr in (0, 1)]


def tl_region(sq: GridSquareId):
    """``sq`` and up to two layers of same-level cells around it."""
    side = sq.side
    c, r = sq.column, sq.row
    cols = range(max(0, c - TL_RADIUS), min(side, c + TL_RADIUS + 1))
    rows = range(max(0, r - TL_RADIUS), min(side, r + TL_RADIUS + 1))
    return [GridSquareId.at(sq.level, cc, rr) for cc in cols for rr in rows]


def cell_gap2(a: GridSquareId, b: GridSquareId) -> int:
    """Squared gap between two closed cells of one level, in cell units."""
    if a.level != b.level:
        raise ValueError(f"cells on different levels: {a} vs {b}")
    dx = max(0, abs(a.column - b.column) - 1)
    dy = max(0, abs(a.row - b.row) - 1)
    return dx * dx + dy * dy


def grid_distance_leq(a: GridSquareId, b: GridSquareId, gap2_bound=SMOOTHNESS_GAP2) -> bool:
    """Whether the cells are within ``sqrt(gap2_bound)`` side lengths;
    the default is the ``4*sqrt(2)`` of the smoothness condition."""
    return cell_gap2(a, b) <= gap2_bound


def smoothness_window():
    """Column/row offsets of every cell within the smoothness distance."""
    span = isqrt(SMOOTHNESS_GAP2) + 1
    out = []
    for dc in range(-span, span + 1):
        for dr in range(-span, span + 1):
            dx = max(0, abs(dc) - 1)
            dy = max(0, abs(dr) - 1)
            if dx * dx + dy * dy <= SMOOTHNESS_GAP2:
                out.append((dc, dr))
    return out
