"""``analyze`` command."""

import argparse
import json
from pathlib import Path

from app.services.reporting import SuiteKind, analyze


def analyze_command(args: argparse.Namespace) -> int:
    outputs = analyze(
        [Path(r) for r in args.runs],
        SuiteKind(args.suite),
        Path(args.out),
        workers=args.workers,
        svg=args.svg,
    )
    print(json.dumps([str(p) for p in outputs], indent=2))
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser("analyze", help="Tables and figures from finished runs")
    parser.add_argument("--runs", nargs="+", required=True, help="Run directories")
    parser.add_argument("--suite", choices=[s.value for s in SuiteKind], required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--svg", action="store_true", help="Also render SVG figures")
    parser.set_defaults(handler=analyze_command)
