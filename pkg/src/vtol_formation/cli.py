"""Command-line interface: ``vtol-formation {validate,run,plot}``.

Exit codes: 0 success, 1 parse/input error, 2 failed checks, 3 run aborted.
The simulation is deterministic, so there is no seed option.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import DEFAULT_SCENARIO, ConfigError, load_config, validation_report
from .engine import SimulationAbort, final_errors, read_csv, run
from .estimator import EXACT, SMOOTHED

EXIT_OK, EXIT_INPUT, EXIT_CHECKS, EXIT_ABORT = 0, 1, 2, 3


def _node_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vtol-formation", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("config", nargs="?", help="scenario TOML file")
        p.add_argument("--config", dest="config_flag", metavar="PATH", help="scenario TOML file")

    p = sub.add_parser("validate", help="check graph and gain conditions")
    add_config(p)

    p = sub.add_parser("run", help="simulate a scenario and write log + report")
    add_config(p)
    p.add_argument("--out-dir", default=".", help="directory for the CSV log and run report")
    p.add_argument("--dt", type=float, help="override the integration step [s]")
    p.add_argument("--t-end", type=float, help="override the final time [s]")
    p.add_argument("--sgn", choices=("exact", "smoothed"), help="switching term: exact sgn or tanh(x/eps)")
    p.add_argument("--eps", type=float, help="boundary-layer width for --sgn smoothed")

    p = sub.add_parser("plot", help="render SVG figures from a CSV log")
    p.add_argument("log", help="CSV log written by 'run'")
    p.add_argument("--out-dir", default=".", help="directory for the SVG files")
    p.add_argument("--nodes", type=_node_list, help="comma-separated follower ids (default: all)")
    return parser


def _config_path(args) -> Path:
    path = args.config_flag or args.config
    return Path(path) if path else DEFAULT_SCENARIO


def cmd_validate(args) -> int:
    config = load_config(_config_path(args))
    report = validation_report(config)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.all_passed else EXIT_CHECKS


def cmd_run(args) -> int:
    config = load_config(_config_path(args))
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
        changes["output_period"] = max(config.output_period, args.dt)
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if args.sgn is not None:
        changes["sgn_mode"] = SMOOTHED if args.sgn == "smoothed" else EXACT
    if args.eps is not None:
        changes["eps"] = args.eps
    config = config.replace(**changes)

    report = validation_report(config)
    if not report.all_passed:
        for line in report.lines():
            if line.startswith("FAIL"):
                print(f"warning: {line}", file=sys.stderr)
        if config.strict_gains:
            print("error: strict_gains is set and some conditions fail", file=sys.stderr)
            return EXIT_CHECKS

    try:
        sim = run(config)
    except SimulationAbort as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path, report_path = out / config.log_file, out / config.report_file
    sim.write_csv(log_path)
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(sim.report) + "\n")

    print(f"log: {log_path}  ({len(sim)} rows)")
    print(f"report: {report_path}")
    for i, (ep, ev) in final_errors(sim).items():
        print(f"follower {i}: final position error {ep:.3e} m, velocity error {ev:.3e} m/s")
    if len(sim):
        print(f"max thrust {sim.stats['max_thrust']:.4f} N, min u_z margin {sim.stats['min_margin']:.4f}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plot import PlotError, write_plots

    try:
        sim = read_csv(args.log)
        paths = write_plots(sim, args.out_dir, args.nodes)
    except (PlotError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for p in paths:
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"validate": cmd_validate, "run": cmd_run, "plot": cmd_plot}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
