"""
Subcommand Handlers

Each handler resolves its configuration and paths, validates them, runs one
service call and prints a short summary. Handlers return a JSON-safe summary
dict; `main` prints it with --json and maps MaleficError to exit code 1.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from cli.app import create_parser
from config.loader import load_config
from config.schemas import PipelineConfig
from config.settings import settings
from services.pipeline import (
    CHECKPOINT_FILE,
    PREDICTIONS_FILE,
    classify_bundle,
    evaluate_checkpoint,
    extract_features,
    generate_corpus,
    interpret_checkpoint,
    preprocess,
    run_pipeline,
    run_stamp,
    train_model,
)
from utils.errors import MaleficError
from utils.logging_config import get_logger, setup_cli_logging

logger = get_logger(__name__)


def _config(args: argparse.Namespace) -> PipelineConfig:
    return load_config(args.preset, args.seed, args.modalities, args.config)


def _path(value: Optional[str], args: argparse.Namespace, *default: str) -> Path:
    return Path(value) if value else Path(args.artifacts).joinpath(*default)


def _banner(args: argparse.Namespace, title: str) -> None:
    if not args.json:
        print("=" * 60)
        print(f"🚀 MALEFIC - {title}")
        print("=" * 60)


def _say(args: argparse.Namespace, line: str) -> None:
    if not args.json:
        print(line)


# ===== Handlers =====

def cmd_gen_corpus(args: argparse.Namespace) -> Dict[str, Any]:
    config = _config(args)
    out = _path(args.out, args, "data")
    _banner(args, "Synthetic Corpus")
    _say(args, f"\n📂 Writing {config.corpus.n_sessions} sessions to: {out}")
    summary = generate_corpus(config, out, run_stamp(config))
    _say(args, f"   Client sentences: {summary.n_client_sentences}")
    _say(args, f"   Labels: {summary.label_counts}")
    _say(args, f"   Fragmented sentences: {summary.n_fragmented}")
    return {"data": str(out), **summary.to_dict()}


def cmd_features(args: argparse.Namespace) -> Dict[str, Any]:
    config = _config(args)
    data = _path(args.data, args, "data")
    _banner(args, "Feature Extraction")
    _say(args, f"\n🎞️  Extracting face and body features in: {data}")
    manifests = extract_features(data, run_stamp(config), args.threads)
    n_files = sum(
        1 for m in manifests.values() for paths in m.sentences.values() for k in paths if k in ("face", "body")
    )
    _say(args, f"   Feature files: {n_files}")
    return {"data": str(data), "sessions": len(manifests), "feature_files": n_files}


def cmd_preprocess(args: argparse.Namespace) -> Dict[str, Any]:
    config = _config(args)
    data = _path(args.data, args, "data")
    reports = _path(args.reports, args, "reports")
    _banner(args, "Preprocessing")
    _say(args, f"\n📄 Reorganizing transcripts in: {data}")
    index = preprocess(data, reports, run_stamp(config))
    _say(args, f"   Indexed client sentences: {len(index)}")
    _say(args, f"   Modalities: {', '.join(m.value for m in index.modalities)}")
    return {"data": str(data), "sentences": len(index), "modalities": [m.value for m in index.modalities]}


def cmd_train(args: argparse.Namespace) -> Dict[str, Any]:
    config = _config(args)
    data = _path(args.data, args, "data")
    out = _path(args.out, args, "checkpoints")
    reports = _path(args.reports, args, "reports")
    _banner(args, "Training")
    _say(args, f"\n🧠 {config.train.model_kind} model, {config.train.epochs} epochs, seed {config.seed}")
    result = train_model(config, data, out, reports, run_stamp(config), args.progress)
    _say(args, f"   Best epoch: {result.best_epoch} (validation macro F1 {result.best_val_macro_f1:.3f})")
    _say(args, f"   Checkpoint: {result.checkpoint_path}")
    return {
        "checkpoint": str(result.checkpoint_path),
        "best_epoch": result.best_epoch,
        "best_val_macro_f1": result.best_val_macro_f1,
        "validation_sessions": result.validation_sessions,
    }


def cmd_eval(args: argparse.Namespace) -> Dict[str, Any]:
    config = _config(args)
    data = _path(args.data, args, "data")
    checkpoint = _path(args.checkpoint, args, "checkpoints", CHECKPOINT_FILE)
    out = _path(args.out, args, "reports")
    _banner(args, "Evaluation")
    report = evaluate_checkpoint(config, data, checkpoint, out, run_stamp(config))
    _say(args, f"\n📊 Macro F1 {report.f1_macro:.3f}  micro F1 {report.f1_micro:.3f}  (n = {report.n_samples})")
    for name, value in report.f1.items():
        lo, hi = report.ci[name]
        _say(args, f"   {name}: {value:.3f} [{lo:.3f}, {hi:.3f}]")
    return {"report": str(out / "eval.json"), **report.to_dict()}


def cmd_interpret(args: argparse.Namespace) -> Dict[str, Any]:
    config = _config(args)
    data = _path(args.data, args, "data")
    checkpoint = _path(args.checkpoint, args, "checkpoints", CHECKPOINT_FILE)
    out = _path(args.out, args, "interpret")
    _banner(args, "Interpretation")
    result = interpret_checkpoint(config, data, checkpoint, out, run_stamp(config))
    _say(args, f"\n🔎 Overall contribution on {len(result.sample_ids)} full-modality sentences:")
    for name, share in result.overall.items():
        _say(args, f"   {name}: {share:.2f}")
    if result.clusters is not None:
        _say(args, f"   Clusters: k = {result.clusters.k}, silhouette {result.clusters.silhouette:.3f}")
    return {
        "output": str(out),
        "overall": result.overall,
        "n_samples": len(result.sample_ids),
        "clusters": result.clusters.k if result.clusters else None,
    }


def cmd_classify(args: argparse.Namespace) -> Dict[str, Any]:
    config = _config(args)
    data = _path(args.data, args, "data")
    checkpoint = _path(args.checkpoint, args, "checkpoints", CHECKPOINT_FILE)
    out = _path(args.out, args, "reports", PREDICTIONS_FILE)
    _banner(args, "Classification")
    records = classify_bundle(data, checkpoint, out, args.sentences, config.evaluation.batch_size)
    classified = [r for r in records if r.get("prediction") is not None]
    _say(args, f"\n🏷️  Classified {len(classified)} of {len(records)} sentences")
    _say(args, f"   Records: {out}")
    return {"output": str(out), "records": len(records), "classified": len(classified)}


def cmd_pipeline(args: argparse.Namespace) -> Dict[str, Any]:
    config = _config(args)
    root = Path(args.artifacts)
    _banner(args, "Pipeline")
    _say(args, f"\n📁 Artifacts: {root}  (preset {config.preset}, seed {config.seed})")
    result = run_pipeline(config, root, args.resume, args.overwrite, args.progress)
    if result.skipped:
        _say(args, f"   Skipped (already complete): {', '.join(result.skipped)}")
    _say(args, f"   Completed: {', '.join(result.completed) or 'nothing to do'}")
    _say(args, "\n" + "=" * 60)
    _say(args, "✅ Pipeline Complete!")
    _say(args, "=" * 60)
    return {
        "artifacts": str(root),
        "stamp": result.stamp.to_dict(),
        "completed": result.completed,
        "skipped": result.skipped,
    }


COMMANDS: Dict[str, Callable[[argparse.Namespace], Dict[str, Any]]] = {
    "gen-corpus": cmd_gen_corpus,
    "features": cmd_features,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "eval": cmd_eval,
    "interpret": cmd_interpret,
    "classify": cmd_classify,
    "pipeline": cmd_pipeline,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one `malefic` command.

    Returns:
        0 on success, 1 on a reported failure; argument errors exit with 2
    """
    args = create_parser().parse_args(argv)
    args.json = args.json or settings.json_errors
    setup_cli_logging(args.json, args.log_level, settings.log_file)

    try:
        summary = COMMANDS[args.command](args)
    except MaleficError as e:
        if args.json:
            print(json.dumps(e.to_dict(), sort_keys=True, default=str), file=sys.stderr)
        else:
            logger.error(f"❌ {e.message}")
        return 1
    except OSError as e:
        payload = {"error": "io_error", "message": str(e), "details": {"path": getattr(e, "filename", None)}}
        if args.json:
            print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)
        else:
            logger.error(f"❌ {e}")
        return 1

    if args.json:
        print(json.dumps(summary, sort_keys=True, default=str))
    return 0
