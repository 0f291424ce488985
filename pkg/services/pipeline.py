"""
Pipeline Runner

Runs the offline steps in order and lays out one artifacts directory:

    config.json              effective configuration
    run.json                 completed steps (for --resume)
    data/                    corpus, features, sentences, index.json
    checkpoints/             model.ckpt.json
    reports/                 mask statistics, loss curve, evaluation, predictions
    interpret/               contribution analysis and projection bundle

Each step draws from its own generator spawned from the run seed, so a step
run on its own gives the same result as inside the full pipeline.
"""

import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np

from config.constants import INDEX_FILE, SENTENCES_SUFFIX, TRANSCRIPT_SUFFIX
from config.schemas import PipelineConfig
from config.settings import settings
from core.checkpoint import load_checkpoint
from data.extractors.feature_pipeline import FeatureExtractor
from data.ingestion.dataset import MultimodalDataset, restrict
from data.ingestion.index_builder import DatasetIndexBuilder, mask_statistics
from data.ingestion.manifests import SessionManifest, flatten, load_manifests
from data.ingestion.transcripts import TranscriptReorganizer, session_from_path, write_sentences
from data.synthetic.generator import CorpusSummary, generate_synthetic_corpus
from models.dataset import DatasetIndex
from models.report import EvalReport
from services.classification import ClassificationService, write_records
from services.evaluator import Evaluator, write_report
from services.interpreter import InterpretResult, Interpreter
from services.trainer import TrainResult, train
from utils.errors import PipelineStateError
from utils.sampling import spawn_generators
from utils.stamping import Stamp, write_csv, write_json

logger = logging.getLogger(__name__)

STEPS = ("gen-corpus", "features", "preprocess", "train", "eval", "interpret", "classify")
SEED_STREAMS = ("corpus", "train", "eval", "interpret")
LAYOUT = ("data", "checkpoints", "reports", "interpret", "config.json", "run.json")

CHECKPOINT_FILE = "model.ckpt.json"
PREDICTIONS_FILE = "predictions.jsonl"


def step_generator(seed: int, stream: str) -> np.random.Generator:
    """Generator of one named step, stable for a given seed."""
    return spawn_generators(seed, len(SEED_STREAMS))[SEED_STREAMS.index(stream)]


def run_stamp(config: PipelineConfig) -> Stamp:
    return Stamp.for_config(config.to_dict(), config.seed)


# ===== Steps =====

def generate_corpus(config: PipelineConfig, data_dir: Union[str, Path], stamp: Optional[Stamp] = None) -> CorpusSummary:
    """Write the synthetic corpus described by the config."""
    stamp = stamp or run_stamp(config)
    return generate_synthetic_corpus(config.corpus, step_generator(config.seed, "corpus"), data_dir, stamp)


def extract_features(
    data_dir: Union[str, Path],
    stamp: Optional[Stamp] = None,
    threads: Optional[int] = None,
) -> Dict[str, SessionManifest]:
    """
    Extract face and body features for every raw manifest.

    Feature manifests go to `features/manifests/` under the data directory.
    """
    data_dir = Path(data_dir)
    raw = load_manifests(data_dir / "manifests")
    if not raw:
        raise PipelineStateError(str(data_dir), hint="no raw manifests; run gen-corpus first")
    features = FeatureExtractor(data_dir, threads=threads, stamp=stamp).run(raw)
    for manifest in features.values():
        manifest.save(data_dir / "features" / "manifests", stamp)
    return features


def preprocess(
    data_dir: Union[str, Path],
    reports_dir: Optional[Union[str, Path]] = None,
    stamp: Optional[Stamp] = None,
) -> DatasetIndex:
    """
    Reorganize transcripts and build the dataset index.

    Writes `sentences/<session>.sentences.jsonl` and `index.json` under the
    data directory, and `mask_statistics.csv` under `reports_dir`.
    """
    data_dir = Path(data_dir)
    manifests = load_manifests(data_dir / "features" / "manifests")
    if not manifests:
        raise PipelineStateError(str(data_dir), hint="no feature manifests; run features first")

    reorganizer = TranscriptReorganizer()
    sentences = {}
    for path in sorted((data_dir / "transcripts").glob(f"*{TRANSCRIPT_SUFFIX}")):
        session = session_from_path(path)
        sentences[session] = reorganizer.reorganize_file(path)
        write_sentences(data_dir / "sentences" / f"{session}{SENTENCES_SUFFIX}", sentences[session])

    declared = sorted({m for manifest in manifests.values() for m in manifest.modalities})
    index = DatasetIndexBuilder(data_dir, declared).build(sentences, flatten(manifests))
    index.save(data_dir / INDEX_FILE, stamp.to_dict() if stamp else None)
    if reports_dir is not None:
        write_csv(Path(reports_dir) / "mask_statistics.csv", mask_statistics(index), stamp)
    return index


def train_model(
    config: PipelineConfig,
    data_dir: Union[str, Path],
    checkpoint_dir: Union[str, Path],
    reports_dir: Optional[Union[str, Path]] = None,
    stamp: Optional[Stamp] = None,
    show_progress: bool = False,
) -> TrainResult:
    """Train on the indexed data and save the best-validation checkpoint."""
    stamp = stamp or run_stamp(config)
    dataset = MultimodalDataset.load(Path(data_dir) / INDEX_FILE)
    return train(
        dataset,
        config.train,
        step_generator(config.seed, "train"),
        output_dir=checkpoint_dir,
        stamp=stamp,
        show_progress=show_progress,
        reports_dir=reports_dir,
    )


def _held_out(dataset: MultimodalDataset, meta: Dict[str, Any]) -> List:
    sessions = meta.get("validation_sessions") or []
    if not sessions:
        logger.warning("Checkpoint lists no validation sessions; using every indexed sample")
        return dataset.samples
    return dataset.by_sessions(sessions)


def evaluate_checkpoint(
    config: PipelineConfig,
    data_dir: Union[str, Path],
    checkpoint: Union[str, Path],
    reports_dir: Union[str, Path],
    stamp: Optional[Stamp] = None,
) -> EvalReport:
    """Score a checkpoint on the sessions it held out during training."""
    stamp = stamp or run_stamp(config)
    model, meta = load_checkpoint(checkpoint)
    dataset = MultimodalDataset.load(Path(data_dir) / INDEX_FILE)
    samples = restrict(_held_out(dataset, meta), model.modalities)
    report = Evaluator(config.evaluation).evaluate_model(model, samples, step_generator(config.seed, "eval"))
    write_report(report, reports_dir, stamp)
    return report


def interpret_checkpoint(
    config: PipelineConfig,
    data_dir: Union[str, Path],
    checkpoint: Union[str, Path],
    output_dir: Union[str, Path],
    stamp: Optional[Stamp] = None,
) -> InterpretResult:
    """Contribution analysis of a fusion checkpoint on its held-out sessions."""
    stamp = stamp or run_stamp(config)
    model, meta = load_checkpoint(checkpoint)
    dataset = MultimodalDataset.load(Path(data_dir) / INDEX_FILE)
    samples = restrict(_held_out(dataset, meta), model.modalities)
    interpreter = Interpreter(config.interpret, config.evaluation.batch_size)
    return interpreter.interpret(model, samples, step_generator(config.seed, "interpret"), output_dir, stamp)


def classify_bundle(
    data_dir: Union[str, Path],
    checkpoint: Union[str, Path],
    output: Union[str, Path],
    sentence_ids: Optional[List[str]] = None,
    batch_size: int = 64,
) -> List[Dict[str, Any]]:
    """Classify an indexed bundle and write one JSON record per sentence."""
    service = ClassificationService.from_checkpoint(checkpoint, batch_size)
    dataset = MultimodalDataset.load(Path(data_dir) / INDEX_FILE)
    records = service.classify_dataset(dataset, sentence_ids)
    write_records(records, output)
    return records


# ===== Orchestration =====

@dataclass
class PipelineResult:
    """What a pipeline run produced."""

    artifacts_dir: Path
    stamp: Stamp
    completed: List[str] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)
    outputs: Dict[str, Any] = field(default_factory=dict)


class PipelineRunner:
    """
    Runs every step into one artifacts directory.

    A directory that already holds any part of the layout is refused unless
    `resume` (skip steps recorded as complete for the same config) or
    `overwrite` (remove the previous layout first) is set.
    """

    def __init__(
        self,
        config: PipelineConfig,
        artifacts_dir: Union[str, Path],
        resume: bool = False,
        overwrite: bool = False,
        show_progress: bool = False,
    ):
        self.config = config
        self.root = Path(artifacts_dir)
        self.resume = resume
        self.overwrite = overwrite
        self.show_progress = show_progress
        self.stamp = run_stamp(config)

    @property
    def data_dir(self) -> Path:
        return self.root / "data"

    @property
    def checkpoint_path(self) -> Path:
        return self.root / "checkpoints" / CHECKPOINT_FILE

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def interpret_dir(self) -> Path:
        return self.root / "interpret"

    def _existing(self) -> List[str]:
        return [name for name in LAYOUT if (self.root / name).exists()]

    def _load_state(self) -> Dict[str, Any]:
        path = self.root / "run.json"
        if not path.exists():
            return {"completed": []}
        return json.loads(path.read_text(encoding="utf-8"))

    def _save_state(self, completed: List[str]) -> None:
        write_json(self.root / "run.json", {"completed": completed}, self.stamp)

    def prepare(self) -> List[str]:
        """
        Check the artifacts directory and return the steps already done.

        Raises:
            PipelineStateError: On a prior run without resume/overwrite, or a
                resume against a different configuration
        """
        existing = self._existing()
        if not existing:
            return []
        if self.overwrite:
            logger.warning(f"Overwriting previous run in {self.root}")
            for name in existing:
                target = self.root / name
                if target.is_dir():
                    shutil.rmtree(target)
                else:
                    target.unlink()
            return []
        if not self.resume:
            raise PipelineStateError(str(self.root), hint=f"found {', '.join(existing)}")
        state = self._load_state()
        previous = state.get("stamp", {}).get("config_hash")
        if previous is not None and previous != self.stamp.config_hash:
            raise PipelineStateError(
                str(self.root),
                hint=f"config hash changed ({previous} -> {self.stamp.config_hash}); use --overwrite",
            )
        completed = [s for s in state.get("completed", []) if s in STEPS]
        logger.info(f"Resuming run in {self.root}; completed steps: {completed or 'none'}")
        return completed

    def _steps(self) -> Dict[str, Callable[[], Any]]:
        cfg, stamp = self.config, self.stamp
        return {
            "gen-corpus": lambda: generate_corpus(cfg, self.data_dir, stamp),
            "features": lambda: extract_features(self.data_dir, stamp, settings.threads),
            "preprocess": lambda: preprocess(self.data_dir, self.reports_dir, stamp),
            "train": lambda: train_model(
                cfg, self.data_dir, self.checkpoint_path.parent, self.reports_dir, stamp, self.show_progress
            ),
            "eval": lambda: evaluate_checkpoint(cfg, self.data_dir, self.checkpoint_path, self.reports_dir, stamp),
            "interpret": lambda: self._interpret(),
            "classify": lambda: classify_bundle(
                self.data_dir,
                self.checkpoint_path,
                self.reports_dir / PREDICTIONS_FILE,
                batch_size=cfg.evaluation.batch_size,
            ),
        }

    def _interpret(self) -> Optional[InterpretResult]:
        if self.config.train.model_kind != "malefic":
            logger.info(f"Skipping interpretation for a {self.config.train.model_kind} model")
            return None
        return interpret_checkpoint(self.config, self.data_dir, self.checkpoint_path, self.interpret_dir, self.stamp)

    def run(self) -> PipelineResult:
        """
        Run the pending steps in order.

        Returns:
            PipelineResult listing completed and skipped steps with each
            step's return value
        """
        done = self.prepare()
        self.root.mkdir(parents=True, exist_ok=True)
        write_json(self.root / "config.json", self.config.to_dict(), self.stamp)
        result = PipelineResult(artifacts_dir=self.root, stamp=self.stamp)
        completed = list(done)
        for name, step in self._steps().items():
            if name in done:
                result.skipped.append(name)
                continue
            logger.info(f"Step {name}")
            result.outputs[name] = step()
            completed.append(name)
            result.completed.append(name)
            self._save_state(completed)
        logger.info(f"Pipeline finished in {self.root} (config {self.stamp.config_hash}, seed {self.stamp.seed})")
        return result


def run_pipeline(
    config: PipelineConfig,
    artifacts_dir: Union[str, Path],
    resume: bool = False,
    overwrite: bool = False,
    show_progress: bool = False,
) -> PipelineResult:
    """Run every step of the pipeline for `config` into `artifacts_dir`."""
    return PipelineRunner(config, artifacts_dir, resume, overwrite, show_progress).run()
