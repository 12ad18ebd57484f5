"""
Command-line entry point for the figure sweeps.

    qd run <experiment> [--config FILE] [--set key=value ...] [--out DIR]
           [--seed S] [--samples N] [--no-plots] [--workers W] [--timing]
    qd validate <experiment> [same options]

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 IO error.
"""

import argparse
import sys
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError

from analysis.exceptions import NumericalError
from services import experiment_runner
from utils.config import Config
from utils.experiment_config import EXPERIMENTS, ConfigError, resolve_config
from utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qd", description="Quasi-degradation probability experiments.")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "evaluate a sweep and write CSV/SVG artifacts"),
                            ("validate", "print the resolved configuration and warnings")):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("experiment", help=f"one of {', '.join(EXPERIMENTS)}")
        sub.add_argument("--config", help="flat key = value config file")
        sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                         help="override one config key (repeatable)")
        sub.add_argument("--out", help="output directory")
        sub.add_argument("--seed", type=int, help="master seed")
        sub.add_argument("--samples", type=int, help="Monte-Carlo samples per sweep point")
        sub.add_argument("--no-plots", action="store_true", help="skip the SVG plot")
        sub.add_argument("--workers", type=int, help="worker processes for sweep points")
        sub.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    return parser


def _flags(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "output_dir": args.out,
        "seed": args.seed,
        "n_samples": args.samples,
        "plots": False if args.no_plots else None,
        "workers": args.workers,
        "timing": True if args.timing else None,
    }


def _print_report(report: experiment_runner.ValidationReport) -> None:
    print(yaml.safe_dump(report.model_dump(), sort_keys=False, default_flow_style=None), end="")
    if not report.warnings:
        print("No warnings.")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and run a command.

    Args:
        argv: Arguments without the program name; defaults to sys.argv[1:]

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    try:
        config = Config()
        setup_logging(level=config.log_level, structured=config.log_structured)
        cfg = resolve_config(args.experiment, args.config, args.overrides, _flags(args), config)

        if args.command == "validate":
            _print_report(experiment_runner.validate(cfg))
            return EXIT_OK

        result = experiment_runner.run(cfg)
        print(f"wrote {result.csv_path}")
        if result.svg_path:
            print(f"wrote {result.svg_path}")
        if result.warnings:
            print(f"{len(result.warnings)} warning(s); blank cells mark skipped routes", file=sys.stderr)
        return EXIT_OK

    except (ConfigError, ValidationError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        # Invalid process environment, or parameters outside a routine's domain
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"IO error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
