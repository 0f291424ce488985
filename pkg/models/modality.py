"""
Modality and Label Enumerations

The fixed orderings here index every mask, attention row, logit and
confusion-matrix row in the application.
"""

from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from config.constants import (
    EMBEDDING_MODALITIES,
    LABEL_ORDER,
    MODALITY_ORDER,
    SEQUENCE_MODALITIES,
)
from utils.errors import ParameterError


class ModalityId(str, Enum):
    """Input modality, ordered as in MODALITY_ORDER."""

    TEXT = "text"
    CLIENT_CONTEXT = "client_context"
    THERAPIST_CONTEXT = "therapist_context"
    AUDIO = "audio"
    FACE = "face"
    BODY = "body"

    @property
    def index(self) -> int:
        return MODALITY_ORDER.index(self.value)

    @property
    def is_sequence(self) -> bool:
        return self.value in SEQUENCE_MODALITIES

    @property
    def is_embedding(self) -> bool:
        return self.value in EMBEDDING_MODALITIES

    @property
    def is_context(self) -> bool:
        return self in (ModalityId.CLIENT_CONTEXT, ModalityId.THERAPIST_CONTEXT)


ALL_MODALITIES: Tuple[ModalityId, ...] = tuple(ModalityId(name) for name in MODALITY_ORDER)


def ordered_modalities(modalities: Iterable[Union[str, ModalityId]]) -> Tuple[ModalityId, ...]:
    """
    Deduplicate modalities and sort them into the fixed order.

    Args:
        modalities: Modality names or ids

    Returns:
        Tuple of ModalityId in MODALITY_ORDER

    Raises:
        ParameterError: If a name is unknown or the set is empty
    """
    resolved = set()
    for item in modalities:
        try:
            resolved.add(ModalityId(item))
        except ValueError:
            raise ParameterError(
                f"Unknown modality '{item}'; expected one of {list(MODALITY_ORDER)}",
                modality=str(item),
            ) from None
    if not resolved:
        raise ParameterError("At least one modality is required")
    return tuple(sorted(resolved, key=lambda m: m.index))


def parse_modalities(spec: Optional[str]) -> Optional[Tuple[ModalityId, ...]]:
    """Parse a comma-separated --modalities flag value."""
    if spec is None:
        return None
    names = [part.strip() for part in spec.split(",") if part.strip()]
    return ordered_modalities(names)


class MiscLabel(str, Enum):
    """MISC client talk type."""

    CT = "CT"
    ST = "ST"
    FN = "FN"

    @property
    def index(self) -> int:
        return LABEL_ORDER.index(self.value)

    @classmethod
    def from_index(cls, index: int) -> "MiscLabel":
        return cls(LABEL_ORDER[int(index)])


ALL_LABELS: Tuple[MiscLabel, ...] = tuple(MiscLabel(name) for name in LABEL_ORDER)


def label_indices(labels: Sequence[Union[str, int, MiscLabel]]) -> List[int]:
    """
    Convert labels given as names, enums or indices to label indices.

    Raises:
        ParameterError: If a label is not one of CT, ST, FN
    """
    out = []
    for label in labels:
        if isinstance(label, MiscLabel):
            out.append(label.index)
        elif isinstance(label, str):
            try:
                out.append(MiscLabel(label).index)
            except ValueError:
                raise ParameterError(f"Unknown label '{label}'", label=label) from None
        else:
            index = int(label)
            if not 0 <= index < len(LABEL_ORDER):
                raise ParameterError(f"Label index {index} out of range", label=index)
            out.append(index)
    return out
