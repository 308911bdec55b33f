"""Command line interface.

Exit codes: 0 pass, 1 check failure, 2 usage error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, NumericalAbort, QpotError
from .scenarios import (
    apply_overrides,
    export_plots_data,
    load_config,
    parse_config,
    preset_path,
    run_scenario,
)
from .verify import CHECKS, report_json, run_checks

USAGE_ERROR, CHECK_FAILURE, NUMERICAL_ABORT = 2, 1, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario config file")
    sim.add_argument("config", help="TOML scenario config")
    sim.add_argument("--out", default=None, help="output directory (default: <config stem>_out)")
    sim.add_argument("--keep-partial", action="store_true", help="keep partial outputs on failure")

    ver = sub.add_parser("verify", help="run the identity audit suite")
    ver.add_argument("name", nargs="?", default="all", help="identity name or 'all'")
    ver.add_argument("--json", dest="json_path", default=None, help="write the audit report JSON here")
    ver.add_argument("--list", action="store_true", help="list available identity names")

    scn = sub.add_parser("scenario", help="run a named preset scenario")
    scn.add_argument("preset", help="preset name (barrier, crossing, double_slit, phase_pair, box)")
    scn.add_argument("--out", default=None)
    scn.add_argument("--keep-partial", action="store_true")
    scn.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config value, e.g. --set evolution.steps=400")

    exp = sub.add_parser("export-plots-data", help="flatten a result directory for plotting")
    exp.add_argument("result_dir")
    exp.add_argument("--out", default=None)
    return parser


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = args.out or (Path(args.config).stem + "_out")
    result = run_scenario(cfg, out, keep_partial=args.keep_partial)
    print(f"scenario {cfg.name}: wrote {len(result.manifest['files'])} files to {result.out_dir}")
    return 0


def _cmd_scenario(args) -> int:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    path = preset_path(args.preset)
    data = tomllib.loads(path.read_text())
    if args.overrides:
        data = apply_overrides(data, args.overrides)
    cfg = parse_config(data)
    out = args.out or f"{args.preset}_out"
    result = run_scenario(cfg, out, keep_partial=args.keep_partial)
    print(f"scenario {cfg.name}: wrote {len(result.manifest['files'])} files to {result.out_dir}")
    return 0


def _cmd_verify(args) -> int:
    if args.list:
        for name in CHECKS:
            print(name)
        return 0
    names = None if args.name == "all" else [args.name]
    try:
        results = run_checks(names)
    except KeyError:
        print(f"unknown identity {args.name!r}; available: {', '.join(CHECKS)}", file=sys.stderr)
        return USAGE_ERROR
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: measured {r.measured:.3e} (tolerance {r.tolerance:.1e}) [{r.anchor}]")
    if args.json_path:
        Path(args.json_path).write_text(report_json(results))
    return 0 if all(r.passed for r in results) else CHECK_FAILURE


def _cmd_export(args) -> int:
    out = export_plots_data(args.result_dir, args.out)
    print(f"wrote flattened plot data to {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "scenario": _cmd_scenario,
        "verify": _cmd_verify,
        "export-plots-data": _cmd_export,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return NUMERICAL_ABORT
    except QpotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CHECK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
