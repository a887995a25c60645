"""
End-to-end runs.

generate → Phase 1 → Phase 2 → evaluate for every seed. Failed seeds are
recorded in their summaries and the loop continues; the exit code is 2 if
any seed failed.

Examples:
    mixfed full --config experiments/small.json --format rich
"""

import argparse

from ..lib.harness import run_full
from ..response import EXIT_FAILURE, EXIT_OK, command_error_handler
from .common import add_common_arguments, emit, load


@command_error_handler
def full(args: argparse.Namespace) -> int:
    cfg, out_dir = load(args)
    summaries = run_full(cfg, out_dir)
    emit({"seeds": summaries}, args.format, "summary")
    return EXIT_OK if all(s["status"] == "ok" for s in summaries) else EXIT_FAILURE


def register(subparsers) -> None:
    parser = subparsers.add_parser("full", help="Run the whole two-phase pipeline for every seed")
    add_common_arguments(parser)
    parser.set_defaults(handler=full)
