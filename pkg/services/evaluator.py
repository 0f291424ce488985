"""
Evaluation Service

Per-class, micro and macro F1, percentile bootstrap intervals and
confusion matrices, plus the evaluation of a trained classifier on a set
of samples.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix as sk_confusion_matrix
from sklearn.metrics import precision_recall_fscore_support

from config.constants import BOOTSTRAP_SAMPLES, CONFIDENCE_LEVEL, LABEL_ORDER
from config.schemas import EvaluationConfig
from core.classifier import BaseClassifier
from data.ingestion.dataset import iter_batches
from models.dataset import MultimodalSample
from models.modality import label_indices
from models.report import EvalReport, F1Scores
from utils.errors import ParameterError
from utils.stamping import Stamp, write_csv, write_json

logger = logging.getLogger(__name__)

N_CLASSES = len(LABEL_ORDER)
CLASS_INDICES = list(range(N_CLASSES))
METRICS = (*LABEL_ORDER, "micro", "macro")

Metric = Union[str, Callable[[np.ndarray, np.ndarray], float]]


def _as_indices(predictions, labels) -> Tuple[np.ndarray, np.ndarray]:
    if len(predictions) != len(labels):
        raise ParameterError(
            f"predictions and labels differ in length ({len(predictions)} vs {len(labels)})",
            n_predictions=len(predictions),
            n_labels=len(labels),
        )
    if len(labels) == 0:
        raise ParameterError("cannot score an empty prediction set")
    return np.asarray(label_indices(predictions)), np.asarray(label_indices(labels))


def _micro_from_counts(correct: float, total: float) -> float:
    # Pooled precision and recall are both correct / total in single-label multiclass.
    return float(correct / total) if total else 0.0


def f1_scores(predictions: Sequence, labels: Sequence) -> F1Scores:
    """
    Per-class, micro and macro F1.

    Per-class F1 is 2PR / (P + R), 0 when P + R = 0. Micro F1 pools the
    counts and equals accuracy; macro F1 is the unweighted class mean.

    Args:
        predictions: Predicted labels (names, enums or indices)
        labels: True labels

    Returns:
        F1Scores

    Raises:
        ParameterError: On a length mismatch or empty input
    """
    pred, true = _as_indices(predictions, labels)
    _, _, per_class, _ = precision_recall_fscore_support(
        true, pred, labels=CLASS_INDICES, average=None, zero_division=0
    )
    tp = np.array([np.sum((pred == k) & (true == k)) for k in CLASS_INDICES])
    return F1Scores(
        per_class={name: float(per_class[k]) for k, name in enumerate(LABEL_ORDER)},
        micro=_micro_from_counts(tp.sum(), true.size),
        macro=float(np.mean(per_class)),
        degenerate_classes=int(np.sum(tp == 0)),
    )


def confusion_matrix(predictions: Sequence, labels: Sequence, normalize: Optional[str] = "row") -> np.ndarray:
    """
    3x3 confusion matrix, rows = actual class, columns = predicted class.

    Args:
        normalize: "row" gives P(pred = j | actual = i) with zero rows for
            absent classes; None gives raw counts
    """
    pred, true = _as_indices(predictions, labels)
    counts = sk_confusion_matrix(true, pred, labels=CLASS_INDICES)
    if normalize is None:
        return counts
    if normalize != "row":
        raise ParameterError(f"Unknown normalization '{normalize}'; expected 'row' or None")
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, totals, out=np.zeros(counts.shape, dtype=np.float64), where=totals > 0)


# ===== Count-based metrics for resampling =====

def _counts(pred: np.ndarray, true: np.ndarray) -> np.ndarray:
    return np.bincount(true * N_CLASSES + pred, minlength=N_CLASSES * N_CLASSES).reshape(N_CLASSES, N_CLASSES)


def metric_from_counts(counts: np.ndarray, metric: str) -> float:
    """Metric value from a 3x3 count matrix."""
    tp = np.diag(counts).astype(np.float64)
    if metric == "micro":
        return _micro_from_counts(tp.sum(), counts.sum())
    precision = np.divide(tp, counts.sum(axis=0), out=np.zeros(N_CLASSES), where=counts.sum(axis=0) > 0)
    recall = np.divide(tp, counts.sum(axis=1), out=np.zeros(N_CLASSES), where=counts.sum(axis=1) > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(N_CLASSES), where=denom > 0)
    if metric == "macro":
        return float(f1.mean())
    return float(f1[LABEL_ORDER.index(metric)])


def bootstrap_ci(
    predictions: Sequence,
    labels: Sequence,
    metric: Metric = "macro",
    n_resamples: int = BOOTSTRAP_SAMPLES,
    rng: Optional[np.random.Generator] = None,
    level: float = CONFIDENCE_LEVEL,
) -> Tuple[float, float]:
    """
    Percentile bootstrap interval of a metric.

    Args:
        predictions: Predicted labels
        labels: True labels
        metric: "CT", "ST", "FN", "micro", "macro" or a callable
            (pred_indices, true_indices) -> float
        n_resamples: Number of resamples B
        rng: Generator; the interval is deterministic given its state
        level: Coverage of the interval

    Returns:
        (lo, hi) at the (1 - level)/2 and (1 + level)/2 percentiles
    """
    pred, true = _as_indices(predictions, labels)
    n = true.size
    if n < 2:
        raise ParameterError(f"bootstrap needs at least 2 samples, got {n}")
    if n_resamples < 1:
        raise ParameterError(f"n_resamples must be >= 1, got {n_resamples}")
    if isinstance(metric, str) and metric not in METRICS:
        raise ParameterError(f"Unknown metric '{metric}'; expected one of {list(METRICS)}")
    rng = rng if rng is not None else np.random.default_rng()
    resamples = rng.integers(0, n, size=(n_resamples, n))
    if callable(metric):
        values = np.array([metric(pred[idx], true[idx]) for idx in resamples])
    else:
        values = np.array([metric_from_counts(_counts(pred[idx], true[idx]), metric) for idx in resamples])
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(values, [100 * alpha, 100 * (1.0 - alpha)])
    return float(lo), float(hi)


def chance_macro_f1(prior: Union[Dict[str, float], Sequence[float]]) -> float:
    """
    Expected macro F1 of a predictor guessing uniformly at random.

    With class prior p_k, precision of class k is p_k and recall is 1/3.
    """
    if isinstance(prior, dict):
        prior = [prior[name] for name in LABEL_ORDER]
    p = np.asarray(prior, dtype=np.float64)
    p = p / p.sum()
    recall = 1.0 / N_CLASSES
    f1 = np.divide(2 * p * recall, p + recall, out=np.zeros_like(p), where=(p + recall) > 0)
    return float(f1.mean())


def evaluate(
    predictions: Sequence,
    labels: Sequence,
    n_resamples: int = BOOTSTRAP_SAMPLES,
    rng: Optional[np.random.Generator] = None,
    level: float = CONFIDENCE_LEVEL,
) -> EvalReport:
    """
    Full report: F1 with bootstrap intervals and confusion matrices.

    Intervals that sampling noise leaves beside the point estimate are
    widened to include it.
    """
    scores = f1_scores(predictions, labels)
    points = {**scores.per_class, "micro": scores.micro, "macro": scores.macro}
    rng = rng if rng is not None else np.random.default_rng()
    ci = {}
    for metric in METRICS:
        if len(labels) >= 2:
            lo, hi = bootstrap_ci(predictions, labels, metric, n_resamples, rng, level)
        else:
            lo = hi = points[metric]
        ci[metric] = (min(lo, points[metric]), max(hi, points[metric]))
    return EvalReport(
        f1=scores.per_class,
        f1_micro=scores.micro,
        f1_macro=scores.macro,
        ci=ci,
        confusion=confusion_matrix(predictions, labels).tolist(),
        confusion_counts=confusion_matrix(predictions, labels, normalize=None).tolist(),
        n_samples=len(labels),
        degenerate_classes=scores.degenerate_classes,
        bootstrap_samples=n_resamples,
    )


def format_table(report: EvalReport) -> str:
    """Human-readable F1 and confusion table."""
    lines = [f"{'metric':<8}{'F1':>8}{'95% CI':>20}"]
    for metric in METRICS:
        lo, hi = report.ci[metric]
        lines.append(f"{metric:<8}{report.point(metric):>8.3f}{f'[{lo:.3f}, {hi:.3f}]':>20}")
    lines.append("")
    lines.append("confusion (rows = actual, row-normalized)")
    lines.append(" " * 6 + "".join(f"{name:>8}" for name in LABEL_ORDER))
    for name, row in zip(LABEL_ORDER, report.confusion):
        lines.append(f"{name:<6}" + "".join(f"{v:>8.3f}" for v in row))
    lines.append(f"n = {report.n_samples}, degenerate classes = {report.degenerate_classes}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, directory: Union[str, Path], stamp: Stamp = None, name: str = "eval") -> Path:
    """
    Write `<name>.json`, `<name>.txt` and `confusion.csv`.

    Returns:
        Path of the JSON report
    """
    directory = Path(directory)
    path = write_json(directory / f"{name}.json", report.to_dict(), stamp)
    header = stamp.header() if stamp else ""
    (directory / f"{name}.txt").write_text(header + format_table(report), encoding="utf-8")
    frame = pd.DataFrame(report.confusion, columns=list(LABEL_ORDER))
    frame.insert(0, "actual", list(LABEL_ORDER))
    write_csv(directory / "confusion.csv", frame, stamp)
    logger.info(f"Wrote evaluation report to {path}")
    return path


class Evaluator:
    """Runs a classifier over samples and scores the predictions."""

    def __init__(self, config: Optional[EvaluationConfig] = None):
        self.config = config or EvaluationConfig()

    def predict(self, model: BaseClassifier, samples: Sequence[MultimodalSample]) -> Tuple[np.ndarray, np.ndarray]:
        """
        Eval-mode class probabilities.

        Returns:
            (probabilities (N, 3), true label indices (N,))
        """
        batches = list(iter_batches(list(samples), self.config.batch_size))
        if not batches:
            return np.zeros((0, N_CLASSES)), np.zeros(0, dtype=np.int64)
        probabilities = np.concatenate([model.predict_proba(b) for b in batches])
        labels = np.concatenate([b.labels for b in batches])
        return probabilities, labels

    def evaluate_model(
        self,
        model: BaseClassifier,
        samples: Sequence[MultimodalSample],
        rng: Optional[np.random.Generator] = None,
    ) -> EvalReport:
        """
        Score a model on the samples it accepts.

        Raises:
            ParameterError: If the model accepts none of the samples
        """
        usable: List[MultimodalSample] = [s for s in samples if model.accepts(s)]
        if len(usable) < len(samples):
            logger.info(f"Evaluating on {len(usable)} of {len(samples)} samples the model accepts")
        probabilities, labels = self.predict(model, usable)
        predictions = probabilities.argmax(axis=1)
        report = evaluate(predictions, labels, self.config.bootstrap_samples, rng, self.config.confidence_level)
        logger.info(f"Macro F1 {report.f1_macro:.3f}, micro F1 {report.f1_micro:.3f} on {report.n_samples} samples")
        return report
