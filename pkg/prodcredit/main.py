import argparse
import logging
import os
import sys
from pathlib import Path

from prometheus_client import write_to_textfile

from prodcredit.config import Scenario
from prodcredit.errors import ConfigError
from prodcredit.metrics import REGISTRY
from prodcredit.runner import COMMANDS, ScenarioRunner

LOG_ENV = "PRODCREDIT_LOG"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prodcredit",
        description="Productivity-indexed credit: loan plans, productivity bonds, HJM checks and bank ledgers",
    )
    parser.add_argument('command', choices=COMMANDS, help="Command to run")
    parser.add_argument(
        '--scenario', '-s', type=Path,
        help="Path to TOML scenario file",
    )
    parser.add_argument('--out', '-o', type=Path, help="Output directory (overrides [output].dir)")
    parser.add_argument('--seed', type=int, help="Root seed (overrides [scenario].seed)")
    parser.add_argument('--threads', type=int, help="Worker threads for path simulation")
    parser.add_argument('--paths', type=int, help="Monte Carlo path count")
    parser.add_argument('--block', help="Only run the loan, bond or hjm block with this name")
    parser.add_argument('--metrics', type=Path, help="Write run metrics in Prometheus text format to this file")
    return parser


def _log_level(name: str) -> int:
    return getattr(logging, name.upper(), logging.INFO)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    env_level = os.environ.get(LOG_ENV)

    scenario = None
    if args.scenario is not None:
        try:
            scenario = Scenario(args.scenario).override(
                seed=args.seed, paths=args.paths, threads=args.threads, out=args.out,
            )
        except ConfigError as exc:
            logging.basicConfig(level=_log_level(env_level or "INFO"))
            logging.getLogger(__name__).error("Invalid scenario: %s", exc)
            return exc.exit_code

    logging.basicConfig(level=_log_level(env_level or (scenario.log_level if scenario else "INFO")))
    runner = ScenarioRunner(scenario, block=args.block, out_dir=args.out)
    code = runner.run(args.command)
    if args.metrics is not None:
        args.metrics.parent.mkdir(parents=True, exist_ok=True)
        write_to_textfile(str(args.metrics), REGISTRY)
    return code


if __name__ == '__main__':
    sys.exit(main())
