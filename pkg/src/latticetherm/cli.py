"""``latticetherm`` command line: run, report and validate experiment configs."""

from __future__ import annotations

import argparse
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from ._settings import cap_override, thread_count
from .errors import (
    ConfigInvalid,
    DimensionNotSupported,
    LatticeThermError,
    ManifestMissing,
    MarginTooSmall,
    SupportNotContained,
    VolumeTooLarge,
)
from .lab import load_config, report, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_NUMERICAL = 4

# config-shaped failures that only show up once the geometry is built
_CONFIG_ERRORS = (ConfigInvalid, MarginTooSmall, SupportNotContained, DimensionNotSupported, ManifestMissing)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, _CONFIG_ERRORS):
        return EXIT_CONFIG
    if isinstance(exc, (VolumeTooLarge, MemoryError)):
        return EXIT_RESOURCE
    return EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latticetherm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", type=Path, default=None, help="output directory (default: config 'output' or ./out)")
    run.add_argument("--threads", type=int, default=None, help="worker threads (env LATTICETHERM_THREADS)")
    run.add_argument(
        "--cap-override",
        type=int,
        default=None,
        metavar="DIM",
        help="acknowledge dense matrices up to Hilbert dimension DIM (default 4096)",
    )

    rep = sub.add_parser("report", help="summarise a finished run")
    rep.add_argument("manifest", type=Path, nargs="?", default=None, help="manifest.json or its directory")
    rep.add_argument("--out", type=Path, default=None, help="run directory holding manifest.json")

    val = sub.add_parser("validate", help="check a config against the schema")
    val.add_argument("--config", required=True, type=Path)
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = args.out or Path(cfg.get("output", "out"))
    threads = args.threads if args.threads is not None else thread_count()
    guard = cap_override(args.cap_override) if args.cap_override else nullcontext()
    with guard:
        manifest = run_experiment(cfg, out, threads=threads)
    print(f"wrote {manifest}")
    return EXIT_OK


def _cmd_report(args) -> int:
    target = args.manifest or args.out
    if target is None:
        raise ManifestMissing("give a manifest path or --out directory")
    sys.stdout.write(report(target))
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: ok ({cfg['experiment']})")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "report": _cmd_report, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except (LatticeThermError, MemoryError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
