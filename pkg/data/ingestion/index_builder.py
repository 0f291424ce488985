"""
Dataset Index Builder

Joins reorganized sentences with per-sentence feature manifests into the
aligned dataset index. Each labeled client sentence gets its own text,
audio, face and body files plus two derived context modalities:

- client_context: earlier client sentences of the same turn
- therapist_context: the trailing sentences of the previous therapist turn,
  up to THERAPIST_CONTEXT_MAX_TOKENS tokens (at least one sentence)

Context entries list the text-embedding files they average over.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Union

import pandas as pd

from config.constants import LABEL_ORDER, MODALITY_ORDER, THERAPIST_CONTEXT_MAX_TOKENS
from data.ingestion.transcripts import tokenize
from models.dataset import DatasetEntry, DatasetIndex
from models.modality import ModalityId, ordered_modalities
from models.transcript import Sentence, Speaker
from utils.errors import IndexingError

logger = logging.getLogger(__name__)

Manifest = Mapping[str, Mapping[str, str]]


def _previous_therapist_turn(sentences: List[Sentence], turn_id: int) -> List[Sentence]:
    earlier = [s for s in sentences if s.speaker == Speaker.THERAPIST and s.turn_id < turn_id]
    if not earlier:
        return []
    last_turn = earlier[-1].turn_id
    return [s for s in earlier if s.turn_id == last_turn]


def therapist_context_sentences(
    sentences: List[Sentence],
    turn_id: int,
    max_tokens: int = THERAPIST_CONTEXT_MAX_TOKENS,
) -> List[Sentence]:
    """
    Trailing sentences of the therapist turn preceding `turn_id`.

    Sentences are taken from the end of the turn while the running token
    count stays within `max_tokens`; the last sentence is always kept.
    """
    turn = _previous_therapist_turn(sentences, turn_id)
    kept: List[Sentence] = []
    remaining = max_tokens
    for sentence in reversed(turn):
        n_tokens = len(tokenize(sentence.text))
        if kept and n_tokens > remaining:
            break
        kept.append(sentence)
        remaining -= n_tokens
    return list(reversed(kept))


def client_context_sentences(sentences: List[Sentence], sentence: Sentence) -> List[Sentence]:
    """Client sentences of the same turn that precede `sentence`."""
    return [
        s for s in sentences
        if s.speaker == Speaker.CLIENT and s.turn_id == sentence.turn_id
        and s.position_in_turn < sentence.position_in_turn
    ]


class DatasetIndexBuilder:
    """
    Builds a DatasetIndex from sentences and manifests.

    Manifest paths are relative to `root`; every referenced path is checked
    before it enters the index.
    """

    def __init__(
        self,
        root: Union[str, Path],
        modalities: Optional[Iterable[Union[str, ModalityId]]] = None,
        therapist_max_tokens: int = THERAPIST_CONTEXT_MAX_TOKENS,
    ):
        """
        Args:
            root: Directory manifest paths resolve against (the index directory)
            modalities: Raw modalities declared by the manifests; contexts are
                added whenever text is present
            therapist_max_tokens: Token bound of the therapist context
        """
        self.root = Path(root)
        self.therapist_max_tokens = therapist_max_tokens
        declared = ordered_modalities(modalities or MODALITY_ORDER)
        if ModalityId.TEXT in declared:
            declared = ordered_modalities(
                [*declared, ModalityId.CLIENT_CONTEXT, ModalityId.THERAPIST_CONTEXT]
            )
        self.modalities = declared

    def _resolve(self, sentence_id: str, modality: str, manifests: Manifest, owner: str) -> Optional[str]:
        path = manifests.get(owner, {}).get(modality)
        if not path:
            return None
        if not (self.root / path).is_file():
            raise IndexingError(sentence_id, modality, path)
        return path

    def entry_for(
        self,
        sentence: Sentence,
        session: List[Sentence],
        manifests: Manifest,
    ) -> DatasetEntry:
        """Index entry of one labeled client sentence."""
        sid = sentence.sentence_id
        paths: Dict[str, List[str]] = {}
        for modality in (ModalityId.TEXT, ModalityId.AUDIO, ModalityId.FACE, ModalityId.BODY):
            if modality not in self.modalities:
                continue
            path = self._resolve(sid, modality.value, manifests, sid)
            if path:
                paths[modality.value] = [path]

        if ModalityId.TEXT in self.modalities:
            contexts = {
                ModalityId.CLIENT_CONTEXT: client_context_sentences(session, sentence),
                ModalityId.THERAPIST_CONTEXT: therapist_context_sentences(
                    session, sentence.turn_id, self.therapist_max_tokens
                ),
            }
            for modality, members in contexts.items():
                resolved = [self._resolve(sid, modality.value, manifests, m.sentence_id) for m in members]
                resolved = [p for p in resolved if p]
                if resolved:
                    paths[modality.value] = resolved

        return DatasetEntry(
            sentence_id=sid,
            session_id=sentence.session_id,
            label=sentence.label,
            turn_id=sentence.turn_id,
            position_in_turn=sentence.position_in_turn,
            paths=paths,
        )

    def build(self, sentences_by_session: Mapping[str, List[Sentence]], manifests: Manifest) -> DatasetIndex:
        """
        Build the index.

        Args:
            sentences_by_session: Reorganized sentences per session, reading order
            manifests: sentence id -> {raw modality: relative path}

        Returns:
            DatasetIndex over labeled client sentences

        Raises:
            IndexingError: If a manifest path does not exist under root
        """
        entries: List[DatasetEntry] = []
        skipped = 0
        for session_id in sorted(sentences_by_session):
            session = sentences_by_session[session_id]
            for sentence in session:
                if sentence.speaker != Speaker.CLIENT:
                    continue
                if sentence.label is None:
                    skipped += 1
                    continue
                entries.append(self.entry_for(sentence, session, manifests))
        if skipped:
            logger.warning(f"Skipped {skipped} unlabeled client sentence(s)")
        logger.info(f"Indexed {len(entries)} client sentences from {len(sentences_by_session)} sessions")
        return DatasetIndex(entries=entries, modalities=self.modalities, root=self.root)


def build_dataset_index(
    sentences_by_session: Mapping[str, List[Sentence]],
    manifests: Manifest,
    root: Union[str, Path] = ".",
    modalities: Optional[Iterable[Union[str, ModalityId]]] = None,
) -> DatasetIndex:
    """Convenience wrapper around DatasetIndexBuilder."""
    return DatasetIndexBuilder(root, modalities).build(sentences_by_session, manifests)


def mask_statistics(index: DatasetIndex) -> pd.DataFrame:
    """
    Availability per modality, overall and per class.

    Returns:
        One row per modality with columns modality, available, share and one
        count column per label
    """
    mask = index.mask_matrix()
    labels = index.labels()
    rows = []
    for j, name in enumerate(MODALITY_ORDER):
        row = {
            "modality": name,
            "available": int(mask[:, j].sum()),
            "share": float(mask[:, j].mean()) if len(index) else 0.0,
        }
        for k, label in enumerate(LABEL_ORDER):
            row[label] = int((mask[:, j] & (labels == k)).sum())
        rows.append(row)
    return pd.DataFrame(rows, columns=["modality", "available", "share", *LABEL_ORDER])
