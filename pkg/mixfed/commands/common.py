"""Arguments and helpers shared by every subcommand."""

import argparse
import sys
from pathlib import Path

from ..lib.config import ExperimentConfig, load_config, resolve_output_dir
from ..response import FORMATS, formatted


def seed_type(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed {value} is not a 64-bit unsigned integer")
    return seed


def add_common_arguments(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", type=Path, required=config_required, help="Experiment config (JSON)")
    parser.add_argument("--seed", type=seed_type, help="Run only this seed instead of the config's list")
    parser.add_argument("--out", type=Path, help="Output directory (default: config, $MIXFED_OUTPUT_DIR, ./runs)")
    parser.add_argument("--format", choices=FORMATS, default="json", help="Output format")


def load(args: argparse.Namespace) -> tuple[ExperimentConfig, Path]:
    """Config with the --seed override applied, plus the resolved output directory."""
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg, resolve_output_dir(cfg, args.out)


def emit(data, fmt: str, data_type: str) -> None:
    sys.stdout.write(formatted(data, fmt, data_type) + "\n")
