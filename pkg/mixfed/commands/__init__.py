"""
Combined parser for all mixfed subcommands.

Command modules:
- generate: Draw and persist mixture instances
- phase1: Anchor descent and clustering on a persisted instance
- phase2: FedAvg/FedProx from Phase 1 centers or a given start
- full: The whole pipeline for every seed
- evaluate: Evaluation report of completed runs (``eval``)
"""

import argparse

from .. import __version__
from . import evaluate, full, generate, phase1, phase2


def create_parser() -> argparse.ArgumentParser:
    """Create the top-level parser with every subcommand registered."""
    parser = argparse.ArgumentParser(
        prog="mixfed",
        description="Clustered federated learning simulator for mixed linear regression",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    # Staged pipeline, in order
    generate.register(subparsers)
    phase1.register(subparsers)
    phase2.register(subparsers)

    full.register(subparsers)
    evaluate.register(subparsers)

    return parser
