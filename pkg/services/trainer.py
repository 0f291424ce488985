"""
Training Service

Epoch loop over class-balanced mini-batches with AdamW and a per-step
learning-rate schedule. Validation loss and macro F1 are recorded every
epoch and the best-validation weights are kept.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from config.schemas import ModelConfig, TrainConfig
from core import ops
from core.checkpoint import save_checkpoint
from core.classifier import BaseClassifier, build_model
from core.optim import AdamW, build_schedule
from data.ingestion.dataset import MultimodalDataset, iter_batches, restrict
from models.dataset import Batch, MultimodalSample
from models.modality import ModalityId, ordered_modalities
from models.report import EpochRecord
from services.evaluator import f1_scores
from utils.errors import ParameterError, TrainingAbortedError
from utils.sampling import weighted_sampler
from utils.stamping import Stamp, write_csv

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    """
    Outcome of a training run.

    Attributes:
        model: Classifier holding the best-validation weights
        history: One record per epoch
        best_epoch: Epoch whose weights were kept (1-based)
        validation_sessions: Sessions held out for validation
    """

    model: BaseClassifier
    history: List[EpochRecord]
    best_epoch: int
    best_val_macro_f1: float
    validation_sessions: List[str] = field(default_factory=list)
    checkpoint_path: Optional[Path] = None
    loss_curve_path: Optional[Path] = None

    def loss_curve(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.history])


def resolve_modalities(config: TrainConfig, input_dims: Dict[str, int]) -> Tuple[ModalityId, ...]:
    """
    Modalities a run trains on: the configured subset, or every modality
    with data.

    Raises:
        ParameterError: If a requested modality has no data
    """
    if config.modalities:
        requested = ordered_modalities(config.modalities)
        missing = [m.value for m in requested if m.value not in input_dims]
        if missing:
            raise ParameterError(f"No data for requested modalities {missing}", modalities=missing)
        return requested
    return ordered_modalities(input_dims)


def model_config_for(config: TrainConfig, input_dims: Dict[str, int]) -> ModelConfig:
    return ModelConfig.for_inputs(
        config.model_kind,
        resolve_modalities(config, input_dims),
        input_dims,
        fusion_dim=config.fusion_dim,
        encoder_dropout=config.encoder_dropout,
        output_dims=config.encoder_output,
    )


class Trainer:
    """
    Trains one classifier.

    All randomness (sampling, dropout, modality dropout, selection) comes
    from the generator passed to `fit`.
    """

    def __init__(self, config: TrainConfig, show_progress: bool = False):
        """
        Initialize the trainer.

        Args:
            config: Training settings
            show_progress: Show a tqdm bar over epochs
        """
        self.config = config
        self.show_progress = show_progress

    def build_model(self, input_dims: Dict[str, int], rng: np.random.Generator) -> BaseClassifier:
        return build_model(model_config_for(self.config, input_dims), rng, self.config.modality_dropout)

    def validate(self, model: BaseClassifier, samples: Sequence[MultimodalSample]) -> Tuple[float, float]:
        """Eval-mode (mean loss, macro F1); (nan, 0) without samples."""
        if not samples:
            return float("nan"), 0.0
        losses, predictions, labels = [], [], []
        for batch in iter_batches(samples, self.config.batch_size):
            trace = model.predict(batch)
            losses.append(ops.cross_entropy(trace.logits, batch.labels).item() * len(batch))
            predictions.append(trace.logits.data.argmax(axis=1))
            labels.append(batch.labels)
        macro = f1_scores(np.concatenate(predictions), np.concatenate(labels)).macro
        return float(np.sum(losses) / len(samples)), macro

    def fit(
        self,
        model: BaseClassifier,
        train_samples: Sequence[MultimodalSample],
        val_samples: Sequence[MultimodalSample],
        rng: np.random.Generator,
    ) -> TrainResult:
        """
        Run the epoch loop.

        Args:
            model: Freshly built classifier
            train_samples: Training samples
            val_samples: Validation samples
            rng: Run generator

        Returns:
            TrainResult with the best-validation weights loaded

        Raises:
            TrainingAbortedError: If a batch loss is not finite
            ParameterError: If no training sample fits the model
        """
        cfg = self.config
        train = restrict([s for s in train_samples if model.accepts(s)], model.modalities)
        val = restrict([s for s in val_samples if model.accepts(s)], model.modalities)
        if not train:
            raise ParameterError("No training samples carry the model's modalities")

        labels = np.array([s.label for s in train], dtype=np.int64)
        steps_per_epoch = math.ceil(len(train) / cfg.batch_size)
        schedule = build_schedule(cfg.scheduler, cfg.max_lr, cfg.epochs * steps_per_epoch)
        optimizer = AdamW(model.parameters(), cfg.max_lr, tuple(cfg.betas), cfg.eps, cfg.weight_decay)
        logger.info(
            f"Training {model.config.kind} on {len(train)} samples ({len(val)} validation), "
            f"{cfg.epochs} epochs x {steps_per_epoch} steps, {cfg.scheduler} max_lr={cfg.max_lr:g}"
        )

        history: List[EpochRecord] = []
        best_state, best_epoch, best_f1 = model.state_dict(), 0, -1.0
        step = 0
        for epoch in tqdm(range(1, cfg.epochs + 1), desc="epochs", disable=not self.show_progress):
            epoch_lr = float(schedule[step])
            order = weighted_sampler(labels, rng)
            batch_losses = []
            for b, start in enumerate(range(0, len(order), cfg.batch_size)):
                batch = Batch.from_samples([train[i] for i in order[start:start + cfg.batch_size]])
                loss, trace = model.training_loss(batch, rng)
                if not np.isfinite(loss.item()):
                    raise TrainingAbortedError(batch_id=b, epoch=epoch, loss=loss.item())
                model.zero_grad()
                model.backward(loss, trace)
                optimizer.step(lr=float(schedule[step]))
                batch_losses.append(loss.item())
                step += 1

            val_loss, val_f1 = self.validate(model, val)
            record = EpochRecord(
                epoch=epoch,
                train_loss=float(np.mean(batch_losses)),
                val_loss=val_loss,
                val_macro_f1=val_f1,
                lr=epoch_lr,
            )
            history.append(record)
            logger.debug(
                f"epoch {epoch}: train_loss={record.train_loss:.4f} val_loss={val_loss:.4f} "
                f"val_macro_f1={val_f1:.3f} lr={epoch_lr:.3g}"
            )
            if val_f1 > best_f1:
                best_state, best_epoch, best_f1 = model.state_dict(), epoch, val_f1

        model.load_state_dict(best_state)
        model.eval()
        logger.info(f"Best validation macro F1 {best_f1:.3f} at epoch {best_epoch}")
        return TrainResult(model=model, history=history, best_epoch=best_epoch, best_val_macro_f1=best_f1)


def write_loss_curve(history: Sequence[EpochRecord], path: Union[str, Path], stamp: Stamp = None) -> Path:
    columns = ["epoch", "train_loss", "val_loss", "val_macro_f1", "lr"]
    return write_csv(path, pd.DataFrame([r.to_dict() for r in history], columns=columns), stamp)


def train(
    dataset: MultimodalDataset,
    config: TrainConfig,
    rng: np.random.Generator,
    output_dir: Optional[Union[str, Path]] = None,
    stamp: Stamp = None,
    show_progress: bool = False,
    reports_dir: Optional[Union[str, Path]] = None,
) -> TrainResult:
    """
    Split by session, build the model, train and (optionally) save.

    Args:
        dataset: Indexed dataset
        config: Training settings
        rng: Run generator; drives the split, initialization and training
        output_dir: When given, receives `model.ckpt.json` and `loss_curve.csv`
        stamp: Run stamp for the written artifacts
        reports_dir: Directory for `loss_curve.csv` (default: output_dir)

    Returns:
        TrainResult
    """
    train_samples, val_samples, val_sessions = dataset.split(rng, config.val_fraction)
    trainer = Trainer(config, show_progress=show_progress)
    model = trainer.build_model(dataset.input_dims(), rng)
    result = trainer.fit(model, train_samples, val_samples, rng)
    result.validation_sessions = list(val_sessions)
    if output_dir is not None:
        output_dir = Path(output_dir)
        result.checkpoint_path = save_checkpoint(
            output_dir / "model.ckpt.json",
            result.model,
            stamp=stamp.to_dict() if stamp else None,
            validation_sessions=val_sessions,
            extra={"best_epoch": result.best_epoch, "best_val_macro_f1": result.best_val_macro_f1},
        )
        curve_dir = Path(reports_dir) if reports_dir is not None else output_dir
        result.loss_curve_path = write_loss_curve(result.history, curve_dir / "loss_curve.csv", stamp)
    return result
