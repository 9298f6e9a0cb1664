"""Command-line entry point.

Subcommands: simulate, diagnose, fit, ingest, verify-constants,
criterion-check. Exit codes: 0 success, 1 usage or configuration error,
2 numerical instability, 3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, default_config, parse_config_file
from .pipeline import (
    cmd_criterion_check,
    cmd_diagnose,
    cmd_fit,
    cmd_ingest,
    cmd_simulate,
    cmd_verify_constants,
)
from .snapshots import SnapshotFormatError
from .solver import SolverInstabilityError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INSTABILITY = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        raise SystemExit(self._print_and_code(message))

    def _print_and_code(self, message) -> int:
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        return EXIT_USAGE


def _load_config(args) -> RunConfig:
    cfg = parse_config_file(args.config) if args.config else default_config()
    if getattr(args, "c_m", None) is not None:
        cfg.values["diagnostics"]["c_m"] = float(args.c_m)
    return cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out) if args.out else cfg.output_dir()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zsparse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="run configuration file")
        p.add_argument("--out", metavar="DIR", help="output directory override")

    p = sub.add_parser("simulate", help="integrate the flow and persist snapshots")
    common(p)

    p = sub.add_parser("diagnose", help="sparseness diagnostics for snapshots")
    common(p)
    p.add_argument("--snapshots", metavar="GLOB", required=True, help="snapshot file glob")

    p = sub.add_parser("fit", help="power-law fit of scale vs diffusion scale")
    common(p)
    p.add_argument("--scaling", metavar="PATH", required=True, help="scaling.csv path")

    p = sub.add_parser("ingest", help="convert raw velocity triples to a snapshot")
    p.add_argument("--input", metavar="PATH", required=True)
    p.add_argument("--header", metavar="PATH", help="sidecar header (default: INPUT.hdr)")
    p.add_argument("--out", metavar="PATH", required=True, help="output snapshot path")

    p = sub.add_parser("verify-constants", help="print the constants block as JSON")
    p.add_argument("--lam", type=float, help="cut fraction override (default: frozen)")
    p.add_argument("--delta", type=float, default=0.75)

    p = sub.add_parser("criterion-check", help="pointwise 1D-sparseness criterion check")
    common(p)
    p.add_argument("--snapshot", metavar="PATH", required=True)
    p.add_argument("--c-m", dest="c_m", type=float, help="analyticity constant c(M)")

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "simulate":
            cfg = _load_config(args)
            result = cmd_simulate(cfg, _out_dir(args, cfg))
            print(f"wrote {len(result.snapshot_paths)} snapshots and {result.trajectory_path}")
        elif args.command == "diagnose":
            cfg = _load_config(args)
            paths = sorted(glob.glob(args.snapshots))
            if not paths:
                print(f"no snapshots match '{args.snapshots}'", file=sys.stderr)
                return EXIT_USAGE
            reports = cmd_diagnose(paths, cfg, _out_dir(args, cfg))
            print(f"diagnosed {len(reports)} snapshots into {_out_dir(args, cfg)}")
        elif args.command == "fit":
            cfg = _load_config(args)
            payload = cmd_fit(args.scaling, cfg, _out_dir(args, cfg))
            print(json.dumps(payload, indent=2, sort_keys=True))
        elif args.command == "ingest":
            out = cmd_ingest(args.input, args.header, args.out)
            print(f"wrote {out}")
        elif args.command == "verify-constants":
            print(json.dumps(cmd_verify_constants(args.lam, args.delta), indent=2, sort_keys=True))
        elif args.command == "criterion-check":
            cfg = _load_config(args)
            payload = cmd_criterion_check(args.snapshot, cfg)
            print(json.dumps(payload, indent=2, sort_keys=True))
        else:  # pragma: no cover
            parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverInstabilityError as exc:
        print(f"numerical instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except (SnapshotFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid value: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
