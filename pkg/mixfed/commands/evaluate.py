"""
Evaluation of completed runs.

Recomputes the EvalReport from ``instance/`` + ``phase2.json``, or reads it
back from the seed's ``summary.json``. Without a config, every
``seed_<n>`` directory under ``--out`` is evaluated with the σ and c_cal
saved in its ``config.json``.

Examples:
    mixfed eval --out runs/small
    mixfed eval --config experiments/small.json --seed 3 --format markdown
"""

import argparse
from pathlib import Path

from ..lib.config import load_config, resolve_output_dir
from ..lib.errors import ConfigError
from ..lib.harness import evaluate_run
from ..response import EXIT_OK, command_error_handler
from .common import add_common_arguments, emit


def discover_seeds(out_dir: Path) -> list[int]:
    seeds = []
    for path in Path(out_dir).glob("seed_*"):
        suffix = path.name.removeprefix("seed_")
        if path.is_dir() and suffix.isdigit():
            seeds.append(int(suffix))
    return sorted(seeds)


@command_error_handler
def evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config) if args.config is not None else None
    out_dir = resolve_output_dir(cfg, args.out)
    if args.seed is not None:
        seeds = [args.seed]
    elif cfg is not None:
        seeds = list(cfg.seeds)
    else:
        seeds = discover_seeds(out_dir)
    if not seeds:
        raise ConfigError(f"No seed_<n> run directories under {out_dir}")

    reports = [{"seed": seed, **evaluate_run(cfg, out_dir, seed).to_dict()} for seed in seeds]
    emit({"reports": reports}, args.format, "report")
    return EXIT_OK


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="Print the evaluation report of completed runs")
    add_common_arguments(parser, config_required=False)
    parser.set_defaults(handler=evaluate)
