"""
Error Hierarchy

Every failure the pipeline reports on purpose derives from MaleficError, so the
CLI can turn it into an exit code and a machine-readable payload.
"""

from typing import Any, Dict, Iterable, Optional, Sequence


class MaleficError(Exception):
    """
    Base class for expected, reportable failures.

    Attributes:
        code: Stable short identifier used in JSON error payloads
        details: Structured context (ids, shapes, sets) for the payload
    """

    code = "malefic_error"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert the error to a JSON-safe dictionary.

        Returns:
            Dictionary with code, message and details
        """
        return {
            "error": self.code,
            "message": self.message,
            "details": {k: _json_safe(v) for k, v in self.details.items()},
        }


def _json_safe(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool, type(None))):
        return value
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value, key=str) if isinstance(value, (set, frozenset)) else value
        return [_json_safe(v) for v in items]
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    return str(value)


class ParameterError(MaleficError, ValueError):
    """Invalid scalar parameter (kernel size, learning rate, lag, ...)."""

    code = "parameter_error"


class ShapeError(MaleficError, ValueError):
    """Operand shapes are incompatible for a tensor operation."""

    code = "shape_error"

    def __init__(self, op: str, *shapes: Sequence[int]) -> None:
        rendered = " and ".join(str(tuple(s)) for s in shapes)
        super().__init__(
            f"{op}: incompatible shapes {rendered}",
            op=op,
            shapes=[list(s) for s in shapes],
        )


class LabelConflictError(MaleficError, ValueError):
    """Change and sustain talk were merged into one sentence."""

    code = "label_conflict"


class IndexingError(MaleficError):
    """A manifest entry points to a file that does not exist."""

    code = "indexing_error"

    def __init__(self, sentence_id: str, modality: str, path: str) -> None:
        super().__init__(
            f"Sentence {sentence_id}: {modality} file not found: {path}",
            sentence_id=sentence_id,
            modality=modality,
            path=path,
        )


class MissingDataError(MaleficError, ValueError):
    """A channel has no observed value at all."""

    code = "missing_data"

    def __init__(self, channel: str) -> None:
        super().__init__(f"Channel '{channel}' has no observed values", channel=channel)


class DegenerateFramingError(MaleficError, ValueError):
    """Bust height is too small to normalize by."""

    code = "degenerate_framing"


class NoAvailableModalityError(MaleficError, ValueError):
    """A sample reached fusion with every modality unavailable."""

    code = "no_available_modality"


class FusionStateError(MaleficError, RuntimeError):
    """Backward requested without a live forward trace."""

    code = "fusion_state_error"


class TrainingAbortedError(MaleficError, RuntimeError):
    """Loss became non-finite during training."""

    code = "training_aborted"

    def __init__(self, batch_id: int, epoch: int, loss: float) -> None:
        super().__init__(
            f"Non-finite loss {loss} at epoch {epoch}, batch {batch_id}",
            batch_id=batch_id,
            epoch=epoch,
            loss=str(loss),
        )


class ModalityMismatchError(MaleficError, ValueError):
    """Checkpoint and input bundle disagree on the modality set."""

    code = "modality_mismatch"

    def __init__(self, expected: Iterable[str], provided: Iterable[str]) -> None:
        expected, provided = sorted(expected), sorted(provided)
        super().__init__(
            f"Checkpoint modalities {expected} are not covered by input modalities {provided}",
            checkpoint_modalities=expected,
            input_modalities=provided,
        )


class ClusteringError(MaleficError, ValueError):
    """Clustering request cannot be satisfied by the data."""

    code = "clustering_error"


class InterpretationError(MaleficError, ValueError):
    """Interpretation request on empty or inconsistent selection maps."""

    code = "interpretation_error"


class CheckpointError(MaleficError):
    """Checkpoint file is unreadable or incompatible."""

    code = "checkpoint_error"


class PipelineStateError(MaleficError):
    """Artifacts directory holds a prior run and no resume/overwrite was given."""

    code = "pipeline_state_error"

    def __init__(self, path: str, hint: Optional[str] = None) -> None:
        super().__init__(
            f"Artifacts directory {path} holds a previous run; pass --resume or --overwrite",
            path=path,
            hint=hint,
        )
