"""Command-line entry point: ``jerkplan run|compare|bench|validate``.

Exit codes: 0 success, 1 usage error, 2 invalid scenario, 3 infeasible
problem (or, for ``validate``, an infeasible plan), 4 solver failure.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import InfeasibleError, JerkPlanError, SolverError
from .obstacles import GatePolicy
from .runner import bench, bench_csv, bench_table, compare, feasibility, execute, run
from .scenario import METHODS, PRESETS, load_scenario, preset

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 1, 2, 3, 4

log = logging.getLogger("jerkplan")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scenario_args(p, multiple=False):
    src = p.add_argument_group("scenario")
    if multiple:
        src.add_argument("--scenario", action="append", default=[], metavar="PATH",
                         help="scenario JSON file (repeatable)")
        src.add_argument("--preset", action="append", default=[], choices=PRESETS)
    else:
        src.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
        src.add_argument("--preset", choices=PRESETS)
    p.add_argument("--w-smooth", type=float, help="pseudo-jerk weight of the QP baseline")
    p.add_argument("--gate-combiner", choices=("min", "max"),
                   help="how v_obs*t_safe and d_min combine into the gate distance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jerkplan", description="Jerk-constrained velocity planning.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("run", help="plan one scenario and write CSV, SVG and a JSON record")
    _scenario_args(p)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--out", metavar="DIR", help="directory for the artifacts")
    p.add_argument("--tol", type=float, default=1e-6, help="feasibility tolerance")

    p = sub.add_parser("compare", help="run both methods and overlay them")
    _scenario_args(p)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("bench", help="time both methods over repetitions")
    _scenario_args(p, multiple=True)
    p.add_argument("--method", choices=METHODS, help="restrict to one method")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--out", metavar="DIR", help="directory for bench.csv")

    p = sub.add_parser("validate", help="check a scenario file, and optionally a plan for it")
    _scenario_args(p)
    p.add_argument("--method", choices=METHODS,
                   help="also plan and check the result against the original problem")
    p.add_argument("--tol", type=float, default=1e-6)
    return parser


def _apply_overrides(scenario, args):
    changes = {}
    if getattr(args, "w_smooth", None) is not None:
        changes["w_smooth"] = args.w_smooth
    if getattr(args, "gate_combiner", None) is not None:
        if not isinstance(scenario.gates, GatePolicy):
            raise UsageError("--gate-combiner needs a gate policy, but the scenario lists "
                             "explicit gates")
        changes["gates"] = replace(scenario.gates, combiner=args.gate_combiner)
    if getattr(args, "method", None) is not None:
        changes["method"] = args.method
    return replace(scenario, **changes) if changes else scenario


def _load_one(args):
    if bool(args.scenario) == bool(args.preset):
        raise UsageError("give exactly one of --scenario or --preset")
    scenario = load_scenario(args.scenario) if args.scenario else preset(args.preset)
    return _apply_overrides(scenario, args)


def _load_many(args):
    if not args.scenario and not args.preset:
        raise UsageError("give at least one --scenario or --preset")
    found = [load_scenario(p) for p in args.scenario] + [preset(p) for p in args.preset]
    return [_apply_overrides(s, args) for s in found]


def _emit(payload):
    print(json.dumps(payload, indent=2))


def _cmd_run(args):
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    record, _, report = run(_load_one(args), out_dir=args.out, tol=args.tol)
    _emit(record.as_dict())
    log.info("feasibility: %s", report.summary())
    return EXIT_OK


def _cmd_compare(args):
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    _emit(compare(_load_one(args), out_dir=args.out, tol=args.tol))
    return EXIT_OK


def _cmd_bench(args):
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    scenarios = _load_many(args)
    methods = (args.method,) if args.method else METHODS
    rows = bench(scenarios, args.reps, methods)
    print(bench_table(rows))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.csv").write_text(bench_csv(rows))
    return EXIT_OK


def _cmd_validate(args):
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    scenario = _load_one(args)
    payload = {"scenario": scenario.name, "valid": True, "n": scenario.grid.n,
               "obstacles": len(scenario.tracks)}
    code = EXIT_OK
    if args.method:
        report = feasibility(scenario, execute(scenario, args.method), args.tol)
        payload["method"] = args.method
        payload["feasibility"] = report.as_dict()
        code = EXIT_OK if report.feasible else EXIT_INFEASIBLE
    _emit(payload)
    return code


COMMANDS = {"run": _cmd_run, "compare": _cmd_compare, "bench": _cmd_bench,
            "validate": _cmd_validate}


def _configure_logging():
    level = os.environ.get("JERKPLAN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"jerkplan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"jerkplan: infeasible ({exc.group}): {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"jerkplan: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except JerkPlanError as exc:
        print(f"jerkplan: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
