"""Command-line entry point: check, reduce, trace, barb and fuzz.

Exit status is 0 on success, 1 on a domain failure (type error or property
violation) and 2 on a usage, I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from functools import partial

from .checker import MUTATIONS, TypingError, check
from .congruence import normalize
from .metatheory import GenerationError, annotate_binders, run_suites
from .parser import ParseError, parse_program
from .semantics import barbs_tick, barbs_tick_in_context, explore, step_deterministic
from .syntax import render

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(path):
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as err:
        raise UsageError(f"{path}: {err.strerror}") from err
    try:
        return parse_program(text)
    except ParseError as err:
        raise UsageError(f"{path}:{err}") from err


def _emit(args, text: str, data) -> None:
    if args.json:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_check(args) -> int:
    prog = _load(args.file)
    try:
        j = check(prog.main, prog.contracts)
    except TypingError as err:
        if args.json:
            print(json.dumps({"status": "error", "error": err.to_json()}, indent=2,
                             sort_keys=True))
        else:
            print(f"{err.kind}: {err}")
        return EXIT_FAIL
    _emit(args, j.render(), {"status": "ok", "judgment": j.to_json()})
    return EXIT_OK


def cmd_reduce(args) -> int:
    prog = _load(args.file)
    state = normalize(annotate_binders(prog.main, prog.contracts))
    rng = None
    if args.policy != "leftmost":
        kind, _, seed = args.policy.partition(":")
        if kind != "random" or not seed.lstrip("-").isdigit():
            raise UsageError(f"unknown policy {args.policy!r}")
        rng = random.Random(int(seed))
    seen = {state}
    states, steps = [state], []
    stopped = "steps"
    for _ in range(args.steps):
        step = step_deterministic(state, args.policy, rng)
        if step is None:
            stopped = "terminal"
            break
        state = step.successor
        steps.append(step)
        states.append(state)
        if state in seen:
            stopped = "revisit"
            break
        seen.add(state)
    else:
        if step_deterministic(state, "leftmost") is None:
            stopped = "terminal"
    if args.json:
        print(json.dumps({
            "states": [render(s) for s in states],
            "steps": [{"rule": s.rule.label, "via": s.via.label if s.via else None,
                       "location": list(s.location)} for s in steps],
            "stopped": stopped}, indent=2, sort_keys=True))
        return EXIT_OK
    width = len(str(len(states) - 1))
    for i, s in enumerate(states):
        print(f"{i:>{width}}  {render(s)}")
        if i < len(steps):
            print(f"{'':>{width}}    -> {steps[i].describe()}")
    print(f"stopped: {stopped} after {len(steps)} steps")
    return EXIT_OK


def cmd_trace(args) -> int:
    prog = _load(args.file)
    if args.max_depth < 0 or args.max_states < 1:
        raise UsageError("--max-depth must be >= 0 and --max-states >= 1")
    g = explore(annotate_binders(prog.main, prog.contracts), args.max_depth,
                args.max_states, include_idle=args.idle)
    fmt = "json" if args.json else args.format
    if fmt == "dot":
        sys.stdout.write(g.to_dot())
    else:
        print(json.dumps(g.to_json(), indent=2))
    return EXIT_OK


def cmd_barb(args) -> int:
    prog = _load(args.file)
    top, ctx = barbs_tick(prog.main), barbs_tick_in_context(prog.main)
    _emit(args, f"barbs_tick: {str(top).lower()}\nbarbs_tick_in_context: {str(ctx).lower()}",
          {"barbs_tick": top, "barbs_tick_in_context": ctx})
    return EXIT_OK


def cmd_fuzz(args) -> int:
    if args.count < 0 or args.size < 1 or args.depth < 0:
        raise UsageError("--count must be >= 0, --size >= 1, --depth >= 0")
    suites = ("sr", "progress") if args.suite == "all" else (args.suite,)
    checker = partial(check, mutation=args.mutation) if args.mutation else check
    if args.count == 0:
        print("warning: --count 0 runs no programs; the pass is vacuous", file=sys.stderr)
    try:
        result = run_suites(args.count, args.size, args.seed, suites, depth=args.depth,
                            checker=checker, progress_depth=args.progress_depth)
    except GenerationError as err:
        raise UsageError(str(err)) from err
    params = {"count": args.count, "size": args.size, "seed": args.seed,
              "suite": args.suite, "depth": args.depth,
              "progress_depth": args.progress_depth, "mutation": args.mutation}
    paths = None
    if args.report:
        from .report import write_report
        paths = write_report(result, args.report, params)
    if args.json:
        from .report import summary_json
        data = summary_json(result, params)
        if paths:
            data["files"] = paths
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        for rep in result.reports.values():
            print(rep.summary())
            for v in rep.violations[:args.show]:
                print(f"  {v.process}\n    {v.step}: expected {v.expected}\n    got {v.observed}")
            if len(rep.violations) > args.show:
                print(f"  ... {len(rep.violations) - args.show} more")
        if paths:
            print("wrote " + ", ".join(paths.values()))
    return EXIT_OK if result.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    parser = argparse.ArgumentParser(prog="vta", parents=[common],
                                     description="Virtually timed ambients workbench.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="type-check a program")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", parents=[common], help="run one reduction sequence")
    p.add_argument("file")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--policy", default="leftmost", help="leftmost or random:SEED")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("trace", parents=[common], help="explore the state space")
    p.add_argument("file")
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--max-states", type=int, default=10_000)
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.add_argument("--idle", action="store_true",
                   help="include new-round steps that leave the term unchanged")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("barb", parents=[common], help="print the tick barbs")
    p.add_argument("file")
    p.set_defaults(func=cmd_barb)

    p = sub.add_parser("fuzz", parents=[common], help="property-test the metatheorems")
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--size", type=int, default=12)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--suite", choices=("sr", "progress", "all"), default="all")
    p.add_argument("--depth", type=int, default=6, help="subject-reduction depth")
    p.add_argument("--progress-depth", type=int, default=10)
    p.add_argument("--mutation", choices=MUTATIONS, default=None,
                   help="run against a deliberately broken checker")
    p.add_argument("--report", metavar="DIR", help="write JSON, CSV and a figure here")
    p.add_argument("--show", type=int, default=5, help="violations printed per suite")
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "json"):
        args.json = False
    try:
        return args.func(args)
    except UsageError as err:
        print(f"vta: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
