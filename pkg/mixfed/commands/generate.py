"""
Instance generation.

Draws each seed's mixture instance and persists it under
``<out>/seed_<seed>/instance/``.

Examples:
    mixfed generate --config experiments/small.json
    mixfed generate --config experiments/small.json --seed 7 --format rich
"""

import argparse
import logging

from ..lib.harness import INSTANCE_DIR, run_stage_generate, seed_dir
from ..response import EXIT_OK, command_error_handler
from .common import add_common_arguments, emit, load

logger = logging.getLogger(__name__)


@command_error_handler
def generate(args: argparse.Namespace) -> int:
    cfg, out_dir = load(args)
    rows = []
    for seed in cfg.seeds:
        truth = run_stage_generate(cfg, seed, out_dir)
        logger.info("Generated instance for seed %d (M=%d, Δ=%.4g)", seed, truth.M, truth.delta)
        rows.append({
            "seed": seed,
            "directory": str(seed_dir(out_dir, seed) / INSTANCE_DIR),
            "k": truth.k,
            "d": truth.d,
            "M": truth.M,
            "N": int(truth.sizes.sum()),
            "delta": truth.delta,
            "p_min": truth.p_min,
        })
    emit({"seeds": rows}, args.format, "instance")
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="Generate and persist mixture instances")
    add_common_arguments(parser)
    parser.set_defaults(handler=generate)
