"""Experiment plumbing shared by the CLI and the test suite."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log2
from pathlib import Path
from typing import Optional

from . import io
from .geometry.delaunay import validate_general_position
from .geometry.predicates import Box
from .geometry.voronoi import clipped_regions, oracle_dual_edges
from .protocol.dt_square import ACTIVE_FACTOR, RunResult, dt_square
from .smoothness import GENERATORS, check_grid_smoothness


def log2_ceil(n) -> int:
    return max(1, ceil(log2(n)))


def default_bits(n) -> int:
    """Coordinate bits used when none are given; see the README for why
    this is larger than the bare minimum ``2*ceil(log2 n)``."""
    return 3 * log2_ceil(n) + 12


@dataclass
class ExperimentConfig:
    n: int
    bits: Optional[int] = None
    seed: int = 0
    generator: str = "grid"
    out: Optional[str] = None
    active_factor: int = ACTIVE_FACTOR
    r_route: int = 4
    r_sort: int = 6
    cmsg: Optional[int] = None
    force: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.bits is None:
            self.bits = default_bits(self.n)
        if self.bits < 2 * log2_ceil(self.n):
            raise ValueError(f"bits={self.bits} below 2*ceil(log2 n)={2 * log2_ceil(self.n)}")
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")

    @property
    def count(self) -> int:
        return self.n * self.n


def generate(cfg: ExperimentConfig):
    return GENERATORS[cfg.generator](cfg.count, cfg.seed, cfg.bits)


class RefusedInput(RuntimeError):
    pass


@dataclass
class RunOutcome:
    result: RunResult
    bits: int
    certified: bool
    counterexample: object = None


def run_points(points, n, bits, *, force=False, cmsg=None, r_route=4, r_sort=6,
               active_factor=ACTIVE_FACTOR) -> RunOutcome:
    """Check the input, then run the protocol and rebuild the regions."""
    if len(points) != n * n:
        raise ValueError(f"n={n} needs {n * n} points, got {len(points)}")
    validate_general_position(points)
    smooth = check_grid_smoothness(points, bits)
    if not smooth.ok and not force:
        raise RefusedInput(f"input is not grid-smooth: {smooth.counterexample.to_dict()}")
    result = dt_square(points, n, bits, cmsg=cmsg, r_route=r_route, r_sort=r_sort,
                       active_factor=active_factor)
    return RunOutcome(result, bits, smooth.ok, smooth.counterexample)


def write_run(outcome: RunOutcome, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": out / "edges.txt",
        "regions": out / "regions.json",
        "report": out / "report.json",
    }
    res = outcome.result
    io.write_text(paths["edges"], io.format_edges(res.all_edges(), outcome.bits))
    io.write_text(paths["regions"], io.format_regions(res.all_regions(), outcome.bits))
    data = res.report.to_dict()
    data["bits"] = outcome.bits
    data["input_certified"] = outcome.certified
    io.write_text(paths["report"], io.format_report(data))
    return paths


@dataclass
class Verdict:
    ok: bool
    message: str
    details: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def verify(points, bits, edges, regions) -> Verdict:
    """Compare edges and regions with oracles computed from the points alone.

    Edges are checked against the circumcenter construction on a fresh
    triangulation and regions against half-plane clipping, neither of which
    the protocol's region walk uses.
    """
    scale = 1 << bits
    box = Box(0, 0, scale, scale)
    want = oracle_dual_edges(points, box)
    got = list(edges)
    problems = []
    dup = len(got) - len(set(got))
    if dup:
        problems.append(f"edge list has {dup} duplicate entries")
    missing = sorted(want - set(got))
    extra = sorted(set(got) - want)
    for e in missing:
        problems.append(f"missing edge {tuple(e.u)}-{tuple(e.v)}")
    for e in extra:
        problems.append(f"unexpected edge {tuple(e.u)}-{tuple(e.v)}")
    if regions is not None:
        ref = clipped_regions(points, box)
        for site in sorted(set(ref) | set(regions)):
            if site not in regions:
                problems.append(f"missing region of site {tuple(site)}")
            elif site not in ref:
                problems.append(f"region for unknown site {tuple(site)}")
            elif regions[site] != ref[site]:
                problems.append(f"region of site {tuple(site)} differs from oracle")
    if problems:
        return Verdict(False, f"FAIL: {problems[0]}", problems)
    return Verdict(True, f"PASS: {len(want)} edges, {len(points)} regions match")


def verify_files(points_path, edges_path, regions_path=None) -> Verdict:
    points, bits = io.parse_points(io.read_text(points_path))
    edges, ebits = io.parse_edges(io.read_text(edges_path))
    if ebits != bits:
        return Verdict(False, f"FAIL: edge file uses B={ebits}, points use B={bits}")
    regions = None
    if regions_path is not None:
        regions, rbits = io.parse_regions(io.read_text(regions_path))
        if rbits != bits:
            return Verdict(False, f"FAIL: region file uses B={rbits}, points use B={bits}")
    return verify(points, bits, edges, regions)


# --- scaling sweep ------------------------------------------------------------------

@dataclass
class ScalingRow:
    n: int
    seed: int
    bits: int
    levels: int
    rounds: int
    messages: int
    total_bits: int
    fixed_rounds: int
    max_level_rounds: int
    max_active: int

    @property
    def rounds_per_log(self) -> float:
        return self.rounds / log2(self.n)

    @property
    def messages_per_n2log(self) -> float:
        return self.messages / (self.n * self.n * log2(self.n))

    @property
    def active_per_n(self) -> float:
        return self.max_active / self.n

    def to_dict(self):
        return {
            "n": self.n, "seed": self.seed, "bits": self.bits, "levels": self.levels,
            "rounds": self.rounds, "messages": self.messages, "total_bits": self.total_bits,
            "fixed_rounds": self.fixed_rounds, "max_level_rounds": self.max_level_rounds,
            "max_active": self.max_active,
            "rounds_per_log2n": round(self.rounds_per_log, 4),
            "messages_per_n2log2n": round(self.messages_per_n2log, 4),
            "active_per_n": round(self.active_per_n, 4),
        }


def scaling_row(n, seed, generator="grid", bits=None, **run_kw) -> ScalingRow:
    cfg = ExperimentConfig(n=n, bits=bits, seed=seed, generator=generator)
    pts = generate(cfg)
    res = dt_square(pts, n, cfg.bits, **run_kw)
    rep = res.report
    return ScalingRow(n=n, seed=seed, bits=cfg.bits, levels=rep.levels_used, rounds=rep.rounds,
                      messages=rep.messages, total_bits=rep.bits, fixed_rounds=rep.fixed_rounds,
                      max_level_rounds=max(rep.rounds_per_level),
                      max_active=max(rep.active_per_level))


def _spread(values):
    lo, hi = min(values), max(values)
    return hi / lo if lo else float("inf")


def _growth(values):
    return values[-1] / values[0] if values[0] else float("inf")


def scaling(ns, seeds=(0,), generator="grid", **run_kw):
    """Run the sweep; returns the rows and a summary of the fitted ratios."""
    rows = [scaling_row(n, s, generator, **run_kw) for n in ns for s in seeds]
    by_n = {}
    for r in rows:
        by_n.setdefault(r.n, []).append(r)
    per_n = []
    for n in sorted(by_n):
        rs = by_n[n]
        per_n.append({
            "n": n,
            "rounds_max": max(r.rounds for r in rs),
            "messages_max": max(r.messages for r in rs),
            "levels_max": max(r.levels for r in rs),
            "fixed_rounds_max": max(r.fixed_rounds for r in rs),
            "level_rounds_max": max(r.max_level_rounds for r in rs),
            "rounds_per_log2n": max(r.rounds_per_log for r in rs),
            "messages_per_n2log2n": max(r.messages_per_n2log for r in rs),
            "active_per_n": max(r.active_per_n for r in rs),
        })
    summary = {
        "per_n": per_n,
        "rounds_per_log2n_spread": _spread([p["rounds_per_log2n"] for p in per_n]),
        "rounds_per_log2n_growth": _growth([p["rounds_per_log2n"] for p in per_n]),
        "fixed_rounds_spread": _spread([p["fixed_rounds_max"] for p in per_n]),
        "level_rounds_spread": _spread([p["level_rounds_max"] for p in per_n]),
        "message_constant": max(p["messages_per_n2log2n"] for p in per_n),
        "messages_per_n2log2n_growth": _growth([p["messages_per_n2log2n"] for p in per_n]),
        "active_per_n_growth": _growth([p["active_per_n"] for p in per_n]),
    }
    return rows, summary
