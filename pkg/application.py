"""Command-line entry point of the PI leak detection pipeline."""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from cli import corpus_commands, detection_commands
from cli.application_model import AppSettings, RunContext
from service.errors import MissingInputError, PiSentryError

logger = logging.getLogger(__name__)


def build_parser(settings: AppSettings) -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per pipeline stage."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", type=Path, help="primary input artifact")
    common.add_argument(
        "--output",
        type=Path,
        default=Path(),
        help="output directory (default: current directory)",
    )
    common.add_argument("--seed", type=int, default=settings.seed, help="random seed")

    parser = argparse.ArgumentParser(
        prog="pi-sentry",
        description="Detect personal-information leaks in mobile HTTP traffic",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    corpus_commands.register(subparsers, settings, common)
    detection_commands.register(subparsers, settings, common)
    return parser


def _options(args: argparse.Namespace) -> dict:
    return {
        name: str(value) if isinstance(value, Path) else value
        for name, value in sorted(vars(args).items())
        if name not in {"handler", "requires_input"}
    }


def _report_failure(subcommand: str, error: PiSentryError) -> int:
    logger.error("✗ %s failed: %s", subcommand, error.message)
    sys.stderr.write(json.dumps(error.to_dict()) + "\n")
    return error.exit_code


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    try:
        settings = AppSettings.from_env()
    except PiSentryError as e:
        sys.stderr.write(json.dumps(e.to_dict()) + "\n")
        return e.exit_code
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser(settings).parse_args(argv)
    try:
        if getattr(args, "requires_input", False) and args.input is None:
            raise MissingInputError(f"{args.subcommand} needs --input")
        context = RunContext(
            subcommand=args.subcommand,
            output_dir=args.output,
            options=_options(args),
            seed=args.seed,
        )
        args.handler(args, context)
        context.write_manifest()
    except PiSentryError as e:
        return _report_failure(args.subcommand, e)
    except Exception as e:
        logger.exception("✗ %s failed", args.subcommand)
        error = {"error": e.__class__.__name__, "message": str(e), "exit_code": 1}
        sys.stderr.write(json.dumps(error) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
