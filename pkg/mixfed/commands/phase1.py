"""
Phase 1 on persisted instances.

Reads ``instance/`` and writes ``phase1.json``. A clustering failure is a
recorded outcome and yields exit code 2.

Examples:
    mixfed phase1 --config experiments/small.json --out runs/small
"""

import argparse

from ..lib.harness import run_stage_phase1
from ..response import EXIT_FAILURE, EXIT_OK, command_error_handler
from .common import add_common_arguments, emit, load


@command_error_handler
def phase1(args: argparse.Namespace) -> int:
    cfg, out_dir = load(args)
    rows = []
    for seed in cfg.seeds:
        result = run_stage_phase1(cfg, seed, out_dir)
        data = result.to_dict()
        rows.append({
            "seed": seed,
            "succeeded": result.succeeded,
            "anchors": data["anchors"],
            "centers": data["centers"],
            "failure": data["failure"],
            "bytes": result.ledger.total,
        })
    emit({"seeds": rows}, args.format, "phase1")
    return EXIT_OK if all(r["succeeded"] for r in rows) else EXIT_FAILURE


def register(subparsers) -> None:
    parser = subparsers.add_parser("phase1", help="Run Phase 1 (anchor descent + clustering) on a persisted instance")
    add_common_arguments(parser)
    parser.set_defaults(handler=phase1)
