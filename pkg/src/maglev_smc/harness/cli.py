"""Command-line interface.

Examples
--------
    maglev-smc list-presets
    maglev-smc preset fig3-regulation --out runs/
    maglev-smc preset fig5-dsmc fig6a-mrof-q3 --parallel 2
    maglev-smc simulate my_scenario.yaml --t-end 2 --out runs/
    maglev-smc validate my_scenario.yaml
    maglev-smc compare runs/*.json
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from .io import read_report, save_record
from .presets import PRESETS, list_presets, preset
from .runner import build_controller, compare, format_table, run_batch
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ABORT = 2


def _overrides(args, sc):
    return sc.replace(dt=args.dt, t_end=args.t_end, seed=args.seed)


def _print_record(rec):
    print(f"[{rec.status}] {rec.name} ({rec.controller}) in {rec.wall_time:.2f} s")
    if rec.message:
        print(f"  {rec.message}")
    for w in rec.warnings:
        print(f"  warning: {w}")
    m = rec.metrics
    if m is not None:
        print(f"  t_s={m.t_s:.4g} s  IAE={m.iae:.4g}  ITAE={m.itae:.4g}  e_dmax={m.e_delta_max:.4g} V")
        print(f"  u_ss={m.u_ss:.5g} V  i_ss={m.i_ss:.5g} A  p_ss={m.p_ss:.6g} m  "
              f"chatter={m.chatter_amp:.3g} V @ {m.chatter_freq:.3g} Hz")


def _run_and_report(scenarios, args) -> int:
    records = run_batch(scenarios, args.parallel)
    for rec in records:
        _print_record(rec)
        if args.out and rec.status != "error":
            csv_path, json_path = save_record(rec, args.out)
            print(f"  wrote {csv_path} and {json_path}")
    if any(r.status == "error" for r in records):
        return EXIT_INVALID
    if any(r.status == "aborted" for r in records):
        return EXIT_ABORT
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenarios = [_overrides(args, load_scenario(p)) for p in args.scenario]
    return _run_and_report(scenarios, args)


def cmd_preset(args) -> int:
    try:
        scenarios = [_overrides(args, preset(n)) for n in args.name]
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_INVALID
    return _run_and_report(scenarios, args)


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, notes = build_controller(sc)
    print(f"{sc.name}: scenario valid ({sc.controller}, dt={sc.dt}, t_end={sc.t_end})")
    for n in notes:
        print(f"  warning: {n}")
    return EXIT_OK


def cmd_compare(args) -> int:
    summaries, runs = [], []
    for item in args.records:
        if Path(item).is_file():
            summaries.append(read_report(item))
        elif item in PRESETS:
            runs.append(_overrides(args, preset(item)))
        else:
            print(f"{item}: neither a report file nor a preset name", file=sys.stderr)
            return EXIT_INVALID
    if runs:
        summaries += [r.summary() for r in run_batch(runs, args.parallel)]
    print(format_table(compare(summaries)))
    return EXIT_OK


def cmd_list(args) -> int:
    for name, desc in list_presets():
        print(f"{name:30s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="directory for CSV traces and JSON reports")
    common.add_argument("--dt", type=float, help="integration step [s]")
    common.add_argument("--t-end", type=float, dest="t_end", help="run length [s]")
    common.add_argument("--seed", type=int, help="seed for sensor noise")
    common.add_argument("--parallel", type=int, default=1, help="worker processes for batches")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="maglev-smc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run scenario file(s)")
    p.add_argument("scenario", nargs="+")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preset", parents=[common], help="run built-in scenario(s)")
    p.add_argument("name", nargs="+")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("compare", parents=[common], help="tabulate reports or presets")
    p.add_argument("records", nargs="+", help="report JSON files or preset names")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", parents=[common], help="check a scenario file and its gains")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list-presets", parents=[common], help="show built-in scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
