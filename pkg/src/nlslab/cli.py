"""Command-line entry point.

    nlslab <command> --config <path> [--outdir <path>] [--seed <n>]

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import NumericalError, ValidationError
from .harness import COMMANDS, RunConfig, run, sweep

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlslab")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="JSON run configuration (defaults when omitted)")
        p.add_argument("--outdir", type=Path, default=None)
        p.add_argument("--seed", type=int, default=None)

    for name in COMMANDS:
        if name == "probe":
            p = sub.add_parser(name)
            p.add_argument("kind", choices=["subadd", "theta", "scaling",
                                            "lemma41-3"])
            p.add_argument("--theta", type=float, default=2.0)
            p.add_argument("--splits", type=str, default=None,
                           help="semicolon-separated b1,b2 pairs, e.g. '0.5,0.5;0.3,0.7'")
            p.add_argument("--lambdas", type=str, default=None,
                           help="comma-separated trial scales")
            add_common(p)
        elif name == "stability":
            p = sub.add_parser(name)
            p.add_argument("--delta", type=float, default=1e-2)
            add_common(p)
        else:
            p = sub.add_parser(name)
            add_common(p)

    p = sub.add_parser("sweep")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True,
                   help="comma-separated numeric values")
    p.add_argument("--command", dest="run_command", required=True,
                   choices=list(COMMANDS))
    add_common(p)
    return parser


def _load_config(args) -> RunConfig:
    doc = {}
    if args.config is not None:
        doc = json.loads(Path(args.config).read_text())
    if args.outdir is not None:
        doc["outdir"] = str(args.outdir)
    if args.seed is not None:
        doc["seed"] = args.seed
    return RunConfig.from_dict(doc)


def _options_from(args) -> dict:
    options = {}
    if args.command == "probe":
        options["kind"] = args.kind
        options["theta"] = args.theta
        if args.splits:
            options["splits"] = [[float(x) for x in pair.split(",")]
                                 for pair in args.splits.split(";")]
        if args.lambdas:
            options["lambdas"] = [float(x) for x in args.lambdas.split(",")]
    elif args.command == "stability":
        options["delta"] = args.delta
    return options


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "sweep":
            values = [float(x) for x in args.values.split(",")]
            sweep(config, args.axis, values, args.run_command, {})
        else:
            run(config, args.command, _options_from(args))
    except (ValidationError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
