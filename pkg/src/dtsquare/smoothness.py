"""Weak-smoothness checking and synthetic input generators.

The checker certifies *grid* smoothness: for every level, every cell
holding at least ``sqrt(N)`` points must have no empty cell of the same
level within ``4*sqrt(2)`` side lengths.  Cells are the only squares the
protocol's correctness argument ever looks at.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Optional

from .geometry.delaunay import validate_general_position
from .geometry.predicates import GeneralPositionError, Point
from .grid import GridSquareId, cell_gap2, smoothness_window, square_number

MAX_REJITTER = 10_000


@dataclass(frozen=True)
class Counterexample:
    level: int
    dense: GridSquareId
    dense_count: int
    empty: GridSquareId
    gap2: Fraction  # squared gap between the two cells, unit-square lengths

    def to_dict(self):
        return {
            "level": self.level,
            "dense": list(self.dense),
            "dense_count": self.dense_count,
            "empty": list(self.empty),
            "gap2": str(self.gap2),
        }


@dataclass(frozen=True)
class SmoothnessReport:
    ok: bool
    counterexample: Optional[Counterexample] = None

    def __bool__(self):
        return self.ok


def cell_counts(points, level, bits) -> Counter:
    return Counter(square_number(p, level, bits) for p in points)


def check_grid_smoothness(points, bits, max_level=None) -> SmoothnessReport:
    """Scan levels ascending, dense cells by number, then neighbours by number;
    report the first dense cell with an empty cell in reach."""
    pts = list(points)
    total = len(pts)
    if max_level is None:
        max_level = bits
    window = smoothness_window()
    for level in range(max_level + 1):
        counts = cell_counts(pts, level, bits)
        dense = sorted(num for num, c in counts.items() if c * c >= total)
        if not dense:
            # counts only shrink with depth, so no deeper cell can be dense
            break
        side = 1 << level
        for num in dense:
            q = GridSquareId(level, num)
            near = []
            for dc, dr in window:
                c, r = q.column + dc, q.row + dr
                if 0 <= c < side and 0 <= r < side:
                    near.append(GridSquareId.at(level, c, r))
            for r in sorted(near, key=lambda s: s.num):
                if counts.get(r.num, 0) == 0:
                    gap = Fraction(cell_gap2(q, r), side * side)
                    return SmoothnessReport(False, Counterexample(level, q, counts[num], r, gap))
    return SmoothnessReport(True)


def _check_budget(count, bits):
    if count < 1:
        raise ValueError("need at least one point")
    if (1 << bits) + 1 < count:
        raise ValueError(f"2**{bits} coordinates cannot hold {count} distinct points")


def generate_perturbed_grid(count, seed, bits):
    """One point per cell of a sqrt(N) x sqrt(N) grid, jittered inside the
    middle half of its cell, re-jittered until in general position."""
    side = isqrt(count)
    if side * side != count:
        raise ValueError(f"N={count} is not a perfect square")
    scale = 1 << bits
    if scale < 4 * side:
        raise ValueError(f"bits={bits} too small for a {side}x{side} grid (need 2**bits >= {4 * side})")
    rng = random.Random(seed)
    bounds = [((c * scale) // side, ((c + 1) * scale) // side) for c in range(side)]

    def jitter(c, r):
        (x0, x1), (y0, y1) = bounds[c], bounds[r]
        wx, wy = x1 - x0, y1 - y0
        return Point(x0 + wx // 4 + rng.randrange(max(1, wx // 2)),
                     y0 + wy // 4 + rng.randrange(max(1, wy // 2)))

    cells = [(c, r) for c in range(side) for r in range(side)]
    pts = [jitter(c, r) for c, r in cells]
    for _ in range(MAX_REJITTER):
        try:
            validate_general_position(pts)
            break
        except GeneralPositionError as exc:
            k = pts.index(max(exc.witness))
            pts[k] = jitter(*cells[k])
    else:
        raise RuntimeError(f"could not reach general position with bits={bits}")
    report = check_grid_smoothness(pts, bits)
    if not report.ok:
        raise RuntimeError(f"perturbed grid failed the smoothness check: {report.counterexample}")
    return pts


def generate_uniform(count, seed, bits):
    """Independent uniform points; may well fail the smoothness check."""
    _check_budget(count, bits)
    rng = random.Random(seed)
    scale = 1 << bits
    seen, pts = set(), []
    while len(pts) < count:
        p = Point(rng.randrange(scale + 1), rng.randrange(scale + 1))
        if p not in seen:
            seen.add(p)
            pts.append(p)
    return pts


def generate_adversarial_cluster(count, seed, bits):
    """Half the points packed into the lower-left level-2 cell, its right-hand
    neighbour left empty, the rest spread over the other three quadrants."""
    if count < 8:
        raise ValueError("the cluster generator needs N >= 8")
    scale = 1 << bits
    quarter = scale // 4
    if quarter * quarter < count:
        raise ValueError(f"bits={bits} too small for {count} clustered points")
    rng = random.Random(seed)
    seen, pts = set(), []

    def add(p):
        if p in seen:
            return False
        seen.add(p)
        pts.append(p)
        return True

    half = scale // 2
    quadrants = [(half, 0), (0, half), (half, half)]
    for qx, qy in quadrants:
        while not add(Point(qx + rng.randrange(half), qy + rng.randrange(half))):
            pass
    packed = count // 2
    while len(pts) < 3 + packed:
        add(Point(rng.randrange(quarter), rng.randrange(quarter)))
    while len(pts) < count:
        qx, qy = quadrants[rng.randrange(3)]
        add(Point(qx + rng.randrange(half + 1), qy + rng.randrange(half + 1)))
    return pts


GENERATORS = {
    "grid": generate_perturbed_grid,
    "uniform": generate_uniform,
    "cluster": generate_adversarial_cluster,
}
