"""Command-line entry point.

Exit codes: 0 success, 1 invariant failure, 2 config error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .output import write_json
from .scenarios import CHECKLIST, ConfigError, parse_config, run_scenario

OUTPUT_ENV = "FUZZYMECH_OUTPUT_DIR"
EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _output_dir(args, cfg) -> Path:
    if args.output_dir:
        return Path(args.output_dir)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, "fuzzymech-out")) / cfg.name


def _load(path):
    try:
        return parse_config(path), None
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return None, EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return None, EXIT_IO


def cmd_run(args) -> int:
    cfg, code = _load(args.config)
    if cfg is None:
        return code
    out = _output_dir(args, cfg)
    try:
        report = run_scenario(cfg, out, seed=args.seed)
        if args.json_report:
            write_json(args.json_report, report.to_dict(include_timing=True))
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        for c in report.checklist:
            mark = "PASS" if c.passed else "FAIL"
            print(f"{mark}  {c.name:<26} {c.value:.6g} {c.relation} {c.bound:.6g}"
                  + (f"  ({c.note})" if c.note else ""))
        print(f"{cfg.name}: {'passed' if report.passed else 'FAILED'} "
              f"in {report.wall_time:.2f}s -> {out}")
    return EXIT_OK if report.passed else EXIT_INVARIANT


def cmd_validate(args) -> int:
    cfg, code = _load(args.config)
    if cfg is None:
        return code
    if not args.quiet:
        print(f"{args.config}: valid {cfg.name} config")
    return EXIT_OK


def cmd_list(args) -> int:
    for name, checks in CHECKLIST.items():
        print(f"{name:<18} {', '.join(checks)}")
    return EXIT_OK


def cmd_version(args) -> int:
    print(__version__)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzymech", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario config")
    run.add_argument("config")
    run.add_argument("--output-dir", help=f"artifact directory (default ${OUTPUT_ENV}/<scenario>)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--json-report", help="also write the report, with wall time, here")
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.add_argument("--quiet", action="store_true")
    val.set_defaults(func=cmd_validate)

    sub.add_parser("list-scenarios", help="scenario names and their checks").set_defaults(func=cmd_list)
    sub.add_parser("version").set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
