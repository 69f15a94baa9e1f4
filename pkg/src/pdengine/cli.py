"""Command line entry point.

Exit codes: 0 success, 2 configuration or schema error, 3 consistency failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import __version__
from .codegen import generate_all
from .config import ConfigError, load_config
from .schema import SchemaError, load_schema
from .simulation import ConsistencyError, run_simulation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONSISTENCY = 3


def _cmd_generate(args: argparse.Namespace) -> int:
    try:
        schema = load_schema(args.schema, require_core=not args.no_core)
    except (OSError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for art in generate_all(schema, args.out):
        print(Path(args.out) / art.relative_path)
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
        overrides = {k: True for k in ("check", "vtk", "threads") if getattr(args, k)}
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        return run_simulation(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConsistencyError as exc:
        print(f"consistency check failed: {exc}", file=sys.stderr)
        for v in exc.violations[:20]:
            print(f"  {v}", file=sys.stderr)
        return EXIT_CONSISTENCY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdengine", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit storage, accessor and packing code from a schema")
    gen.add_argument("--schema", required=True, type=Path)
    gen.add_argument("--out", required=True, type=Path)
    gen.add_argument("--no-core", action="store_true",
                     help="do not require the position/interactionRadius core properties")
    gen.set_defaults(func=_cmd_generate)

    run = sub.add_parser("run", help="run a simulation from a config file")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--check", action="store_true", help="global consistency check every step")
    run.add_argument("--vtk", action="store_true", help="also write legacy VTK point files")
    run.add_argument("--threads", action="store_true", help="one worker thread per rank")
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("version", help="print the package version")
    ver.set_defaults(func=lambda args: print(__version__) or EXIT_OK)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
