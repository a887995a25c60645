"""
mixfed command-line entry point.

Usage:
    mixfed full --config experiments/small.json
    python -m mixfed.main eval --out runs/small

Log level comes from $MIXFED_LOG_LEVEL (default WARNING), so stderr carries
only the JSON error object unless more is asked for.
"""

import logging
import os
import sys

from .commands import create_parser

LOG_LEVEL_VAR = "MIXFED_LOG_LEVEL"

logger = logging.getLogger("mixfed")


def configure_logging() -> None:
    logging.basicConfig(
        level=os.environ.get(LOG_LEVEL_VAR, "WARNING").upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, run the subcommand and return its exit code."""
    configure_logging()
    args = create_parser().parse_args(argv)
    logger.debug("Running %s", args.command)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
