"""
Phase 2 on persisted intermediates.

Starts from ``phase1.json`` centers, or from ``--theta-start`` (a phase1.json,
phase2.json or bare k x d JSON list), and writes the run files.

Examples:
    mixfed phase2 --config experiments/small.json --out runs/small
    mixfed phase2 --config experiments/small.json --theta-start start.json
"""

import argparse
from pathlib import Path

from ..lib.harness import run_stage_phase2
from ..response import EXIT_FAILURE, EXIT_OK, command_error_handler
from .common import add_common_arguments, emit, load


@command_error_handler
def phase2(args: argparse.Namespace) -> int:
    cfg, out_dir = load(args)
    summaries = [run_stage_phase2(cfg, seed, out_dir, args.theta_start) for seed in cfg.seeds]
    emit({"seeds": summaries}, args.format, "summary")
    return EXIT_OK if all(s["status"] == "ok" for s in summaries) else EXIT_FAILURE


def register(subparsers) -> None:
    parser = subparsers.add_parser("phase2", help="Run Phase 2 (FedAvg/FedProx) from a starting model")
    add_common_arguments(parser)
    parser.add_argument("--theta-start", type=Path, help="Starting model file (default: phase1.json)")
    parser.set_defaults(handler=phase2)
