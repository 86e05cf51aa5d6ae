"""Command-line entry point: ``weaktraj <stage> [--config PATH] [--seed N] [--out DIR] [--set key=value ...]``.

Exit codes: 0 success, 1 configuration error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import STAGES, load_config
from .errors import ConfigError
from .pipeline import run_pipeline

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master RNG seed (overrides the config)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--set", dest="overrides", metavar="KEY=VALUE", action="append", default=[],
                        help="override one config key; repeatable")
    parser = argparse.ArgumentParser(prog="weaktraj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGES:
        sub.add_parser(stage, parents=[common], help=f"run the {stage} stage (and its prerequisites)")
    sub.add_parser("run", parents=[common], help="run the stages listed in the config (default: all)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out is not None:
        overrides.append(f"out={args.out}")
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"weaktraj: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stages = None if args.command == "run" else [args.command]
    manifest = run_pipeline(cfg, stages)
    for name in manifest.outputs:
        print(f"{cfg.out}/{name}")
    if not manifest.ok:
        print(f"weaktraj: stage {manifest.failed_stage!r} failed: {manifest.error}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
