"""
Command-Line Parser Factory

Creates the argument parser for the `malefic` tool: one subcommand per
pipeline step plus `pipeline`, which runs them all.
"""

import argparse
from typing import List, Optional

from config.presets import preset_names
from config.settings import settings
from models.modality import ALL_MODALITIES


def parse_modality_list(value: str) -> List[str]:
    """Comma-separated modality names, e.g. "text,audio,face"."""
    names = [v.strip() for v in value.split(",") if v.strip()]
    known = {m.value for m in ALL_MODALITIES}
    unknown = [n for n in names if n not in known]
    if not names or unknown:
        raise argparse.ArgumentTypeError(
            f"unknown modalities {unknown or [value]}; expected a subset of {sorted(known)}"
        )
    return names


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML config file (overrides flags and preset)")
    common.add_argument("--seed", type=int, help=f"Run seed (default: {settings.default_seed})")
    common.add_argument(
        "--modalities",
        type=parse_modality_list,
        help="Comma-separated modality subset, e.g. text,audio,face",
    )
    common.add_argument(
        "--preset",
        choices=preset_names(),
        help=f"Run preset (default: {settings.default_preset})",
    )
    common.add_argument(
        "--artifacts",
        default=settings.artifacts_dir,
        help=f"Artifacts directory (default: {settings.artifacts_dir})",
    )
    common.add_argument("--json", action="store_true", help="Machine-readable output; errors as JSON on stderr")
    common.add_argument("--log-level", default=settings.log_level, help=f"Log level (default: {settings.log_level})")
    return common


def create_parser() -> argparse.ArgumentParser:
    """
    Create the `malefic` argument parser.

    Returns:
        Parser whose parsed namespace carries the handler in `command`
    """
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="malefic",
        description="Interpretable multimodal fusion classifier for client utterances",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen-corpus", parents=[common], help="Generate a synthetic multimodal corpus")
    p.add_argument("--out", help="Data directory (default: <artifacts>/data)")

    p = sub.add_parser("features", parents=[common], help="Extract face and body expressivity features")
    p.add_argument("--data", help="Data directory (default: <artifacts>/data)")
    p.add_argument("--threads", type=int, help=f"Worker threads (default: {settings.threads})")

    p = sub.add_parser("preprocess", parents=[common], help="Reorganize transcripts and build the dataset index")
    p.add_argument("--data", help="Data directory (default: <artifacts>/data)")
    p.add_argument("--reports", help="Reports directory (default: <artifacts>/reports)")

    p = sub.add_parser("train", parents=[common], help="Train a classifier on the indexed data")
    p.add_argument("--data", help="Data directory (default: <artifacts>/data)")
    p.add_argument("--out", help="Checkpoint directory (default: <artifacts>/checkpoints)")
    p.add_argument("--reports", help="Reports directory (default: <artifacts>/reports)")
    p.add_argument("--progress", action="store_true", default=settings.show_progress, help="Show a progress bar")

    p = sub.add_parser("eval", parents=[common], help="Evaluate a checkpoint on its held-out sessions")
    p.add_argument("--data", help="Data directory (default: <artifacts>/data)")
    p.add_argument("--checkpoint", help="Checkpoint file (default: <artifacts>/checkpoints/model.ckpt.json)")
    p.add_argument("--out", help="Reports directory (default: <artifacts>/reports)")

    p = sub.add_parser("interpret", parents=[common], help="Analyse modality contributions of a fusion checkpoint")
    p.add_argument("--data", help="Data directory (default: <artifacts>/data)")
    p.add_argument("--checkpoint", help="Checkpoint file (default: <artifacts>/checkpoints/model.ckpt.json)")
    p.add_argument("--out", help="Output directory (default: <artifacts>/interpret)")

    p = sub.add_parser("classify", parents=[common], help="Classify an indexed input bundle")
    p.add_argument("--data", help="Bundle directory holding index.json (default: <artifacts>/data)")
    p.add_argument("--checkpoint", help="Checkpoint file (default: <artifacts>/checkpoints/model.ckpt.json)")
    p.add_argument("--out", help="Prediction records (default: <artifacts>/reports/predictions.jsonl)")
    p.add_argument("--sentence", action="append", dest="sentences", metavar="ID", help="Only this sentence id")

    p = sub.add_parser("pipeline", parents=[common], help="Run every step into the artifacts directory")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--resume", action="store_true", help="Skip steps a previous run completed")
    mode.add_argument("--overwrite", action="store_true", help="Replace a previous run")
    p.add_argument("--progress", action="store_true", default=settings.show_progress, help="Show a progress bar")
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    return create_parser().parse_args(argv)
