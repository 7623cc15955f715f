"""Command-line entry point: ``laddermem <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import traceback

from . import __version__
from .config import ConfigError, lint_preset, preset_names
from .harness import FIGURES, default_jobs, run

log = logging.getLogger("laddermem")


def _times(text):
    try:
        return tuple(float(x) * 1e-9 for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated ns values: {exc}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="laddermem", description="Ladder-memory simulation and analysis harness.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required=False):
        sp.add_argument("--scenario", required=scenario_required, help="scenario file or preset name")
        sp.add_argument("--out", help="output directory for the run record and tables")
        sp.add_argument("--jobs", type=int, default=default_jobs(), help="max concurrent scenario runs")
        sp.add_argument("--seed", type=int, default=None)

    common(sub.add_parser("simulate", help="one storage-and-retrieval run"), True)
    sp = sub.add_parser("lifetime", help="efficiency vs storage time and decay fit")
    common(sp, True)
    sp.add_argument("--times", type=_times, help="storage times in ns, comma separated")
    sp = sub.add_parser("sweep", help="parameter scan, optionally with nested optimisation")
    common(sp, True)
    sp.add_argument("--figure", choices=FIGURES)
    sp.add_argument("--times", type=_times, help="storage times in ns for fig2")
    sp = sub.add_parser("fit", help="fit the decay model to a curve")
    common(sp)
    sp.add_argument("--input", help="two-column table: t_ns, eta")
    sp.add_argument("--bootstrap", type=int, default=0)
    sp.add_argument("--times", type=_times)
    common(sub.add_parser("budget", help="end-to-end efficiency from the transmission budget"))
    sp = sub.add_parser("report", help="summary table of the memory figures of merit")
    common(sp)
    sp.add_argument("--compare", choices=("flame1",))
    sp = sub.add_parser("lint-presets", help="check presets for completeness and provenance")
    sp.add_argument("names", nargs="*")
    return p


def _error_record(command, exc):
    rec = {"status": "error", "command": command, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        rec["line"] = exc.line
        rec["source"] = exc.source
    return rec


def _lint(names):
    names = names or preset_names()
    problems = {}
    for n in names:
        issues = lint_preset(n)
        if issues:
            problems[n] = issues
    for n in names:
        print(f"{n}: {'ok' if n not in problems else '; '.join(problems[n])}")
    return 1 if problems else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "lint-presets":
            return _lint(args.names)
        opts = {k: v for k, v in vars(args).items() if k not in ("command", "scenario", "out", "verbose")}
        record = run(args.command, args.scenario, args.out, **{k: v for k, v in opts.items() if v is not None})
    except Exception as exc:
        log.debug("%s", traceback.format_exc())
        print(json.dumps(_error_record(args.command, exc)), file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    if args.command == "report":
        print(record.results["text"])
    elif args.command == "budget":
        for r in record.results["budget"]:
            print(f"{r['preset']:<20} {r['mode']:<8} eta_int(0) {100 * r['eta_internal_0']:5.1f} %  "
                  f"eta_e2e(0) {100 * r['eta_e2e_0']:5.1f} %")
    else:
        print(json.dumps({"status": "ok", "command": record.command, "config_hash": record.config_hash,
                          "results_hash": record.results_hash, "wall_time": record.wall_time}))
    return 0


if __name__ == "__main__":

    sys.exit(main())
