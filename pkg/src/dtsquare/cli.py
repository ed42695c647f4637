"""Command line front end: generate | check-smooth | run | verify | scaling."""

from __future__ import annotations

import argparse
import json
import sys
from math import isqrt

from . import harness, io
from .clique import ModelViolation
from .geometry.predicates import GeneralPositionError
from .protocol.dt_square import ProtocolError
from .smoothness import GENERATORS, check_grid_smoothness

EXIT_FAIL = 1
EXIT_REFUSED = 2


def _add_sim_flags(p):
    p.add_argument("--r-route", type=int, default=4, help="rounds charged per routing call")
    p.add_argument("--r-sort", type=int, default=6, help="rounds charged per sorting call")
    p.add_argument("--cmsg", type=int, default=None,
                   help="message budget in units of ceil(log2 n) bits (default: smallest that fits)")


def build_parser():
    ap = argparse.ArgumentParser(prog="dtsquare", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write a synthetic point set")
    g.add_argument("--n", type=int, required=True, help="clique size; n**2 points are generated")
    g.add_argument("--bits", type=int, default=None, help="coordinate bits B (default 3*ceil(log2 n)+12)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--generator", choices=sorted(GENERATORS), default="grid")
    g.add_argument("--out", default=None, help="output file (default stdout)")

    c = sub.add_parser("check-smooth", help="grid-smoothness verdict for a point file")
    c.add_argument("points")

    r = sub.add_parser("run", help="run the protocol on a point file")
    r.add_argument("points")
    r.add_argument("--n", type=int, default=None, help="clique size (default sqrt of the point count)")
    r.add_argument("--out", default="run-out", help="directory for edges/regions/report")
    r.add_argument("--force", action="store_true", help="run even if the input is not certified smooth")
    _add_sim_flags(r)

    v = sub.add_parser("verify", help="check run output against the oracles")
    v.add_argument("points")
    v.add_argument("edges")
    v.add_argument("regions", nargs="?", default=None)

    s = sub.add_parser("scaling", help="sweep n and report cost ratios")
    s.add_argument("--n", type=int, nargs="+", default=[4, 8, 16])
    s.add_argument("--seeds", type=int, default=1, help="number of seeds per n")
    s.add_argument("--seed", type=int, default=0, help="first seed")
    s.add_argument("--generator", choices=sorted(GENERATORS), default="grid")
    s.add_argument("--bits", type=int, default=None)
    s.add_argument("--out", default=None, help="write the JSON table here (default stdout)")
    _add_sim_flags(s)
    return ap


def cmd_generate(args):
    cfg = harness.ExperimentConfig(n=args.n, bits=args.bits, seed=args.seed, generator=args.generator)
    pts = harness.generate(cfg)
    text = io.format_points(pts, cfg.bits)
    report = check_grid_smoothness(pts, cfg.bits)
    verdict = "smooth" if report.ok else f"NOT smooth: {json.dumps(report.counterexample.to_dict())}"
    if args.out:
        io.write_text(args.out, text)
        print(f"wrote {len(pts)} points (B={cfg.bits}) to {args.out}; {verdict}")
    else:
        sys.stdout.write(text)
        print(verdict, file=sys.stderr)
    return 0


def cmd_check_smooth(args):
    pts, bits = io.parse_points(io.read_text(args.points))
    report = check_grid_smoothness(pts, bits)
    if report.ok:
        print("smooth")
        return 0
    print(json.dumps({"smooth": False, "counterexample": report.counterexample.to_dict()}))
    return EXIT_FAIL


def cmd_run(args):
    pts, bits = io.parse_points(io.read_text(args.points))
    n = args.n if args.n is not None else isqrt(len(pts))
    if n * n != len(pts):
        print(f"error: {len(pts)} points is not n**2 for n={n}", file=sys.stderr)
        return EXIT_REFUSED
    try:
        outcome = harness.run_points(pts, n, bits, force=args.force, cmsg=args.cmsg,
                                     r_route=args.r_route, r_sort=args.r_sort)
    except harness.RefusedInput as exc:
        print(f"refused: {exc} (use --force to run anyway)", file=sys.stderr)
        return EXIT_REFUSED
    except GeneralPositionError as exc:
        print(f"refused: input not in general position: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (ProtocolError, ModelViolation) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    paths = harness.write_run(outcome, args.out)
    rep = outcome.result.report
    print(f"n={n} B={bits} levels={rep.levels_used} rounds={rep.rounds} "
          f"messages={rep.messages} bits={rep.bits} edges={len(outcome.result.all_edges())}")
    print(f"active per level: {rep.active_per_level}")
    if not outcome.certified:
        print("input not certified (grid-smoothness check failed, ran with --force)")
    for kind, p in paths.items():
        print(f"{kind}: {p}")
    return 0


def cmd_verify(args):
    try:
        verdict = harness.verify_files(args.points, args.edges, args.regions)
    except io.FormatError as exc:
        print(f"FAIL: {exc}")
        return EXIT_FAIL
    print(verdict.message)
    for extra in verdict.details[1:6]:
        print(f"  {extra}")
    return 0 if verdict.ok else EXIT_FAIL


def cmd_scaling(args):
    seeds = range(args.seed, args.seed + args.seeds)
    rows, summary = harness.scaling(args.n, seeds, args.generator, bits=args.bits, cmsg=args.cmsg,
                                    r_route=args.r_route, r_sort=args.r_sort)
    doc = {"rows": [r.to_dict() for r in rows], "summary": summary}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        io.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if args.out:
        print(f"{'n':>4} {'levels':>6} {'rounds':>7} {'messages':>9} {'r/log n':>8} {'m/n2log n':>9}")
        for r in rows:
            print(f"{r.n:>4} {r.levels:>6} {r.rounds:>7} {r.messages:>9} "
                  f"{r.rounds_per_log:>8.1f} {r.messages_per_n2log:>9.2f}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "check-smooth": cmd_check_smooth,
    "run": cmd_run,
    "verify": cmd_verify,
    "scaling": cmd_scaling,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except (io.FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
