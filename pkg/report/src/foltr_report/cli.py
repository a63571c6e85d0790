"""Command line entry point: `report curves|tables --in <dir> --out <path>`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .curves import FigureSpec, render_curves
from .loading import ReportInputError
from .tables import render_tables


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="report",
                                     description="Render figures and tables from run logs")
    sub = parser.add_subparsers(dest="command", required=True)

    curves = sub.add_parser("curves", help="learning-curve figure, one panel per click profile")
    curves.add_argument("--in", dest="run_dir", required=True, help="run log directory")
    curves.add_argument("--out", dest="out_path", required=True, help="image file to write")
    curves.add_argument("--scenario", default=None, help="restrict to one attack scenario")
    curves.add_argument("--strategies", nargs="+", default=None,
                        help="strategies to overlay (default: all found)")

    tables = sub.add_parser("tables", help="markdown summary tables")
    tables.add_argument("--in", dest="run_dir", required=True, help="summarized run log directory")
    tables.add_argument("--out", dest="out_path", default=None,
                        help="markdown file to write (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "curves":
            spec = FigureSpec(output_path=args.out_path, scenario=args.scenario,
                              strategies=tuple(args.strategies) if args.strategies else None)
            written = render_curves(spec, args.run_dir)
            print(f"wrote {written}")
        else:
            text = render_tables(args.run_dir)
            if args.out_path:
                Path(args.out_path).write_text(text)
                print(f"wrote {args.out_path}")
            else:
                print(text, end="")
    except (ReportInputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
