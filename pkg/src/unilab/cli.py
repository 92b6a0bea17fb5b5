"""Command-line runner for scenarios and traces.

Exit codes: 0 when every property passes, 1 on a violation, 2 when a
verdict is inconclusive (horizon reached or messages held), 3 on bad input.
"""

from __future__ import annotations

import argparse
import sys

from .checkers import CHECKERS, PropertyReport, evaluate, unknown_properties
from .errors import BoundExceeded, UnilabError
from .explore import enumerate_schedules
from .scenario import PROTOCOLS, bundled_names, load, load_bundled
from .trace import Trace

BAD_INPUT = 3


def _print_report(report: PropertyReport, out) -> None:
    for line in report.lines():
        print(line, file=out)
    for v in report.verdicts.values():
        if v.witness is not None:
            w = v.witness
            print(f"-- witness for {v.name}: seed={w.seed}"
                  + (f" schedule={','.join(map(str, w.schedule))}" if w.schedule else ""),
                  file=out)
            for line in w.excerpt:
                print(f"   {line}", file=out)
            break
    print(f"overall: {report.status}", file=out)


def cmd_run(args, out) -> int:
    config = load(args.scenario)
    from .scenario import run_scenario

    trace, report = run_scenario(config, seed=args.seed, protocol=args.protocol)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(trace.dumps())
    events = len(trace.events())
    print(f"scenario {config.name or args.scenario}: protocol={args.protocol or config.protocol} "
          f"n={config.params.n} t={config.params.t} "
          f"seed={config.seed if args.seed is None else args.seed} events={events} "
          f"held={trace.held} horizon-exceeded={int(trace.horizon_exceeded)}", file=out)
    _print_report(report, out)
    return report.exit_code


def cmd_enumerate(args, out) -> int:
    config = load(args.scenario)
    try:
        result = enumerate_schedules(config, args.bound, protocol=args.protocol,
                                     reduce=args.reduce)
    except BoundExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"variants={result.variants} states={result.states} terminals={result.terminals} "
          f"schedules={result.schedules}", file=out)
    if result.witness_schedule is not None:
        print(f"witness schedule: {','.join(map(str, result.witness_schedule))}", file=out)
        if result.variants > 1:
            print("witness scenario:", file=out)
            for line in result.witness_scenario.splitlines():
                print(f"   {line}", file=out)
    _print_report(result.report, out)
    return result.report.exit_code


def cmd_check(args, out) -> int:
    with open(args.trace, encoding="utf-8") as fh:
        trace = Trace.loads(fh.read())
    names = args.property or []
    if not names:
        print("error: give at least one --property", file=sys.stderr)
        return BAD_INPUT
    bad = unknown_properties(names)
    if bad:
        print(f"error: unknown properties: {', '.join(bad)}", file=sys.stderr)
        return BAD_INPUT
    report = evaluate(trace, names, seed=int(trace.meta.get("seed", 0)))
    _print_report(report, out)
    return report.exit_code


def cmd_list(args, out) -> int:
    for name in bundled_names():
        config = load_bundled(name)
        print(f"{name:28s} {config.protocol:16s} {config.description}", file=out)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(BAD_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unilab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario once and check its properties")
    run.add_argument("scenario", help="path to a .scn file or a bundled scenario name")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--trace", help="write the trace to this file")
    run.add_argument("--protocol", choices=PROTOCOLS, help="override the scenario's protocol")
    run.set_defaults(func=cmd_run)

    enum = sub.add_parser("enumerate", help="explore every delivery interleaving")
    enum.add_argument("scenario")
    enum.add_argument("--bound", type=int, required=True, help="maximum distinct states")
    enum.add_argument("--protocol", choices=PROTOCOLS)
    enum.add_argument("--no-reduce", dest="reduce", action="store_false",
                      help="explore every ordering of independent events too")
    enum.set_defaults(func=cmd_enumerate)

    check = sub.add_parser("check", help="check properties of a saved trace")
    check.add_argument("trace")
    check.add_argument("--property", action="append", metavar="P",
                       help="property to check, repeatable; one of: " + ", ".join(sorted(CHECKERS)))
    check.set_defaults(func=cmd_check)

    lst = sub.add_parser("list-scenarios", help="list bundled scenarios")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (UnilabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
