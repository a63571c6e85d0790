"""Command line entry point: `foltr run` and `foltr summarize`."""

from __future__ import annotations

import argparse
import sys

from .config import ExperimentConfig, desk_preset, load_config
from .errors import ConfigurationError
from .runner import run_experiment
from .summarize import write_summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foltr",
                                     description="Federated OLTR unlearning simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file or preset")
    run.add_argument("--config", help="YAML experiment configuration")
    run.add_argument("--preset", choices=["desk"], help="start from a named preset")
    run.add_argument("--out", default="runs", help="output directory")

    summ = sub.add_parser("summarize", help="aggregate a directory of run logs")
    summ.add_argument("--in", dest="run_dir", required=True, help="run directory")
    summ.add_argument("--out", help="summary file path (default: <dir>/summary.json)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            base = desk_preset() if args.preset == "desk" else ExperimentConfig()
            config = load_config(args.config, base=base) if args.config else base.validate()
            written = run_experiment(config, args.out)
            print(f"wrote {len(written)} files to {args.out}")
        else:
            out_path = write_summary(args.run_dir, args.out)
            print(f"wrote {out_path}")
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
