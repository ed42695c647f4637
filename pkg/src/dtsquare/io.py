"""Flat-file formats: point sets, edge lists, regions and run reports."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .geometry.predicates import Point, make_edge
from .geometry.voronoi import PERIMETER, VoronoiRegion


class FormatError(ValueError):
    pass


def _int_rows(text, width, what):
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"empty {what} file")
    header, rows = lines[0], lines[1:]
    if len(header) != 2:
        raise FormatError(f"bad {what} header: {' '.join(header)!r}")
    try:
        count, bits = int(header[0]), int(header[1])
        body = [tuple(int(v) for v in r) for r in rows]
    except ValueError as exc:
        raise FormatError(f"non-integer field in {what} file: {exc}") from None
    for k, r in enumerate(body):
        if len(r) != width:
            raise FormatError(f"{what} line {k + 2}: expected {width} fields, got {len(r)}")
    if len(body) != count:
        raise FormatError(f"{what} header says {count} rows, found {len(body)}")
    return bits, body


# points: "N B" then "x y"

def format_points(points, bits) -> str:
    out = [f"{len(points)} {bits}"]
    out.extend(f"{p[0]} {p[1]}" for p in points)
    return "\n".join(out) + "\n"


def parse_points(text):
    bits, rows = _int_rows(text, 2, "point")
    scale = 1 << bits
    pts = [Point(*r) for r in rows]
    for p in pts:
        if not (0 <= p.x <= scale and 0 <= p.y <= scale):
            raise FormatError(f"point {tuple(p)} outside [0, 2**{bits}]^2")
    if len(set(pts)) != len(pts):
        raise FormatError("duplicate points")
    return pts, bits


# edges: "E B" then "ux uy vx vy"

def format_edges(edges, bits) -> str:
    es = sorted(edges)
    out = [f"{len(es)} {bits}"]
    out.extend(f"{e.u.x} {e.u.y} {e.v.x} {e.v.y}" for e in es)
    return "\n".join(out) + "\n"


def parse_edges(text):
    bits, rows = _int_rows(text, 4, "edge")
    return [make_edge(Point(r[0], r[1]), Point(r[2], r[3])) for r in rows], bits


# regions: JSON, rationals as "p/q" strings

def _frac(v) -> str:
    return str(Fraction(v))


def regions_to_json(regions, bits):
    recs = []
    for site in sorted(regions):
        r = regions[site]
        recs.append({
            "site": [r.site[0], r.site[1]],
            "vertices": [[_frac(x), _frac(y)] for x, y in r.vertices],
            "arcs": [None if a is PERIMETER else [a[0], a[1]] for a in r.arcs],
        })
    return {"bits": bits, "regions": recs}


def regions_from_json(doc):
    try:
        bits = int(doc["bits"])
        out = {}
        for rec in doc["regions"]:
            site = Point(*rec["site"])
            verts = tuple((Fraction(x), Fraction(y)) for x, y in rec["vertices"])
            arcs = tuple(PERIMETER if a is None else Point(*a) for a in rec["arcs"])
            if len(arcs) != len(verts):
                raise FormatError(f"region of {tuple(site)}: {len(verts)} vertices, {len(arcs)} arcs")
            out[site] = VoronoiRegion(site, verts, arcs)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed regions document: {exc}") from None
    return out, bits


def format_regions(regions, bits) -> str:
    # one region per line keeps the file diffable
    doc = regions_to_json(regions, bits)
    recs = ",\n".join("  " + json.dumps(r, sort_keys=True) for r in doc["regions"])
    return f'{{"bits": {bits}, "regions": [\n{recs}\n]}}\n'


def parse_regions(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"regions file is not JSON: {exc}") from None
    return regions_from_json(doc)


def format_report(report) -> str:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_text(path, text):
    Path(path).write_text(text)


def read_text(path) -> str:
    return Path(path).read_text()
