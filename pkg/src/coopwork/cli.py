"""Command line entry point: ``coopwork {gen,validate,simulate,bounds,ratio,concentration}``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

from . import analysis, patterns
from .compdag import computation_width, load_pattern, save_pattern, validate
from .scheduling import ALIASES, SchedulerPolicy
from .simulator import monte_carlo
from .taskgraph import build_leveled, load_taskgraph, save_taskgraph

POLICIES = sorted(ALIASES)


def _fraction(text: str) -> Fraction:
    return Fraction(text)


def _emit(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=True, default=str)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_gen(args):
    kind = args.kind.replace("-", "_")
    if kind == "two_level":
        c = patterns.gen_two_level_lb(args.w, args.t, args.alpha)
        levels = [int(args.alpha * args.t), args.t - int(args.alpha * args.t)]
    elif kind == "k_level":
        if not args.fractions:
            raise SystemExit("--fractions is required for k-level patterns")
        c = patterns.gen_k_level_lb(args.w, args.t, args.fractions)
        levels = [int(f * args.t) for f in args.fractions]
    elif kind == "isolated":
        c, levels = patterns.gen_isolated(args.p, args.t), [args.t]
    elif kind == "single":
        c, levels = patterns.gen_single_group(args.p, args.t), [args.t]
    else:
        spec = patterns.PatternSpec(
            kind="random", p=args.p, t=args.t, depth=args.depth,
            merge_prob=args.merge_prob, max_quota=args.max_quota,
        )
        c, levels = patterns.gen_random(spec, args.seed), [args.t]
    save_pattern(c, args.out)
    if args.tasks_out:
        save_taskgraph(build_leveled([n for n in levels if n > 0]), args.tasks_out)
    print(f"wrote {args.out}: {c.n} vertices, {len(c.edges)} edges, p={c.p}, t={c.t}")


def cmd_validate(args):
    c = load_pattern(args.pattern)
    verdict = validate(c)
    report = {"ok": verdict.ok, "violations": list(verdict.violations)}
    if verdict.ok:
        report["computation_width"] = computation_width(c)
        report["total_quota"] = c.total_work()
    _emit(report, None)
    return 0 if verdict.ok else 1


def cmd_simulate(args):
    c = load_pattern(args.pattern)
    g = load_taskgraph(args.tasks)
    summary = monte_carlo(c, g, SchedulerPolicy(args.policy), args.trials, args.seed)
    rows = zip(range(summary.trials), summary.seeds, summary.work, summary.terminal_complete)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "seed", "total_work", "terminal_complete"])
        for trial, seed, work, done in rows:
            writer.writerow([trial, int(seed), int(work), str(bool(done)).lower()])
    finally:
        if args.out:
            fh.close()
    if args.out:
        print(
            f"{summary.trials} trials, mean work {summary.mean:.4f} "
            f"(std {summary.std:.4f}, min {summary.min}, max {summary.max})",
            file=sys.stderr,
        )


def cmd_bounds(args):
    kind = args.kind.replace("-", "_")
    if kind == "two_level":
        out = {
            "kind": "two-level", "cw": args.cw, "alpha": args.alpha, "c": args.c,
            "upper": analysis.bound_two_level(args.cw, args.alpha, args.c),
            "lower": analysis.lower_bound_two_level(args.cw, args.alpha),
        }
    else:
        if not args.fractions:
            raise SystemExit("--fractions is required for k-level bounds")
        out = {"kind": "k-level", **analysis.bound_report(args.cw, args.fractions, args.c)}
    _emit(out, args.out)


def cmd_ratio(args):
    c = load_pattern(args.pattern)
    g = load_taskgraph(args.tasks)
    rec = analysis.empirical_ratio(
        c, g, SchedulerPolicy(args.policy), args.trials, args.seed,
        pattern_id=args.pattern, const=args.c,
    )
    _emit(rec.to_dict(), args.out)


def cmd_concentration(args):
    rep = analysis.concentration_check(args.w, args.t, args.alpha, args.trials, args.seed)
    _emit(rep.summary(), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coopwork", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a computation pattern file")
    p.add_argument("--kind", required=True,
                   choices=["two-level", "k-level", "isolated", "single", "random"])
    p.add_argument("--w", type=int, default=2)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--alpha", type=_fraction, default=Fraction(1))
    p.add_argument("--fractions", type=_fraction, nargs="+")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--merge-prob", type=float, default=0.5)
    p.add_argument("--max-quota", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--tasks-out", help="also write the matching leveled task graph")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="check a pattern file and report its computation width")
    p.add_argument("--pattern", required=True)
    p.set_defaults(func=cmd_validate)

    def run_args(p):
        p.add_argument("--pattern", required=True)
        p.add_argument("--tasks", required=True)
        p.add_argument("--policy", choices=POLICIES, default="mrs")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte Carlo runs, one CSV row per trial")
    run_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ratio", help="empirical competitive ratio as JSON")
    run_args(p)
    p.add_argument("--c", type=float, default=analysis.C_LIMIT)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("bounds", help="evaluate the closed-form bounds")
    p.add_argument("--kind", choices=["two-level", "k-level"], default="two-level")
    p.add_argument("--cw", type=int, required=True)
    p.add_argument("--alpha", type=_fraction, default=Fraction(1))
    p.add_argument("--fractions", type=_fraction, nargs="+")
    p.add_argument("--c", type=float, default=analysis.C_LIMIT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("concentration", help="tasks left at the first merge of the two-level pattern")
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--alpha", type=_fraction, default=Fraction(1))
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_concentration)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args) or 0


if __name__ == "__main__":
    sys.exit(main())
