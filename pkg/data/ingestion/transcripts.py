"""
Transcript Reorganization

Turns turn-fragmented transcripts into speaker sentences: listener
backchannels that interrupt a sentence are removed, the interrupted pieces
are merged back, and the MISC labels of merged pieces are resolved.
"""

import json
import logging
import re
from dataclasses import replace
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Union

from config.constants import BACKCHANNEL_LEXICON, DEFAULT_MAX_BACKCHANNEL_TOKENS, SENTENCE_TERMINATORS
from models.modality import MiscLabel
from models.transcript import Sentence, Utterance
from utils.errors import LabelConflictError, ParameterError

logger = logging.getLogger(__name__)

TOKEN_PATTERN = re.compile(r"[a-z]+(?:[-'][a-z]+)*")


def tokenize(text: str) -> List[str]:
    """Lower-cased word tokens; hyphenated and apostrophe forms stay whole."""
    return TOKEN_PATTERN.findall(text.lower())


def is_interrupted(text: str) -> bool:
    """A sentence is still open when it does not end with . ? or !"""
    return not text.rstrip().endswith(SENTENCE_TERMINATORS)


def _is_backchannel(
    transcript: Sequence[Utterance],
    i: int,
    max_tokens: int,
    lexicon: FrozenSet[str],
) -> bool:
    if i == 0 or i == len(transcript) - 1:
        return False
    prev, utt, nxt = transcript[i - 1], transcript[i], transcript[i + 1]
    if prev.speaker == utt.speaker or nxt.speaker != prev.speaker:
        return False
    if not is_interrupted(prev.text):
        return False
    tokens = tokenize(utt.text)
    return 1 <= len(tokens) <= max_tokens and all(t in lexicon for t in tokens)


def flag_backchannels(
    transcript: Sequence[Utterance],
    max_tokens: int = DEFAULT_MAX_BACKCHANNEL_TOKENS,
    lexicon: Iterable[str] = BACKCHANNEL_LEXICON,
) -> List[Utterance]:
    """
    Mark interjections that interrupt another speaker's open sentence.

    An utterance is a backchannel when the previous utterance belongs to
    another speaker and does not end a sentence, the next utterance resumes
    that speaker, and its 1..max_tokens tokens all come from the lexicon.
    The utterance after a backchannel gets `follows_interruption`.

    Returns:
        New list; input utterances are not modified
    """
    lexicon = frozenset(lexicon)
    flags = [_is_backchannel(transcript, i, max_tokens, lexicon) for i in range(len(transcript))]
    flagged = []
    for i, utt in enumerate(transcript):
        resumes = i > 0 and flags[i - 1] and not flags[i]
        flagged.append(replace(
            utt,
            is_backchannel=flags[i],
            follows_interruption=utt.follows_interruption or resumes,
        ))
    return flagged


def remove_backchannels(
    transcript: Sequence[Utterance],
    max_tokens: int = DEFAULT_MAX_BACKCHANNEL_TOKENS,
    lexicon: Iterable[str] = BACKCHANNEL_LEXICON,
) -> List[Utterance]:
    """
    Drop backchannels, preserving the order of everything else.

    Args:
        transcript: Utterances ordered by start_time
        max_tokens: Longest interjection still treated as a backchannel
        lexicon: Allowed backchannel tokens

    Returns:
        Utterances without backchannels; resumed utterances carry
        follows_interruption=True
    """
    if max_tokens < 1:
        raise ParameterError(f"max_tokens must be >= 1, got {max_tokens}")
    if not transcript:
        return []
    flagged = flag_backchannels(transcript, max_tokens, lexicon)
    removed = sum(u.is_backchannel for u in flagged)
    if removed:
        logger.debug(f"Removed {removed} backchannel(s) from {len(flagged)} utterances")
    return [u for u in flagged if not u.is_backchannel]


def resolve_label(parts: Sequence[Optional[MiscLabel]]) -> Optional[MiscLabel]:
    """
    Resolve the labels of utterances merged into one sentence.

    Equal labels stay; FN with CT gives CT; FN with ST gives ST. Unlabeled
    parts are ignored.

    Raises:
        LabelConflictError: If CT and ST appear together
        ParameterError: If parts is empty
    """
    if len(parts) == 0:
        raise ParameterError("resolve_label needs at least one label")
    present = {MiscLabel(p) for p in parts if p is not None}
    if not present:
        return None
    if {MiscLabel.CT, MiscLabel.ST} <= present:
        raise LabelConflictError(
            "Change talk and sustain talk merged into one sentence",
            labels=sorted(p.value for p in present),
        )
    if MiscLabel.CT in present:
        return MiscLabel.CT
    if MiscLabel.ST in present:
        return MiscLabel.ST
    return MiscLabel.FN


def merge_turn_sentences(transcript: Sequence[Utterance]) -> List[Sentence]:
    """
    Rebuild speaker sentences from a backchannel-free transcript.

    A same-speaker utterance flagged `follows_interruption` is appended to
    the open sentence. turn_id increases on every speaker change and
    position_in_turn counts sentences inside a turn.
    """
    sentences: List[Sentence] = []
    turn_id = -1
    for utt in transcript:
        current = sentences[-1] if sentences else None
        if current is not None and utt.follows_interruption and utt.speaker == current.speaker:
            current.text = f"{current.text} {utt.text.strip()}".strip()
            current.source_ids.append(utt.utterance_id)
            current.source_labels.append(utt.label)
            current.label = resolve_label(current.source_labels)
            continue
        if current is None or utt.speaker != current.speaker:
            turn_id += 1
            position = 0
        else:
            position = current.position_in_turn + 1
        sentences.append(Sentence(
            speaker=utt.speaker,
            text=utt.text.strip(),
            label=utt.label,
            source_ids=[utt.utterance_id],
            turn_id=turn_id,
            position_in_turn=position,
            source_labels=[utt.label],
        ))
    return sentences


def sentence_id(session_id: str, k: int) -> str:
    return f"{session_id}-{k:04d}"


class TranscriptReorganizer:
    """
    Reads `*.transcript.jsonl` sessions and produces labeled sentences.
    """

    def __init__(
        self,
        max_tokens: int = DEFAULT_MAX_BACKCHANNEL_TOKENS,
        lexicon: Iterable[str] = BACKCHANNEL_LEXICON,
    ):
        """
        Initialize the reorganizer.

        Args:
            max_tokens: Longest interjection still treated as a backchannel
            lexicon: Allowed backchannel tokens
        """
        self.max_tokens = max_tokens
        self.lexicon = frozenset(lexicon)

    def reorganize(self, session_id: str, transcript: Sequence[Utterance]) -> List[Sentence]:
        """
        Full reorganization of one session.

        Returns:
            Sentences with ids "<session>-<k:04d>" in reading order
        """
        ordered = sorted(transcript, key=lambda u: (u.start_time, u.utterance_id))
        cleaned = remove_backchannels(ordered, self.max_tokens, self.lexicon)
        sentences = merge_turn_sentences(cleaned)
        for k, sentence in enumerate(sentences):
            sentence.sentence_id = sentence_id(session_id, k)
        logger.debug(f"Session {session_id}: {len(transcript)} utterances -> {len(sentences)} sentences")
        return sentences

    def reorganize_file(self, path: Union[str, Path]) -> List[Sentence]:
        path = Path(path)
        return self.reorganize(session_from_path(path), read_transcript(path))


def session_from_path(path: Path) -> str:
    name = path.name
    return name.split(".", 1)[0]


def read_transcript(path: Union[str, Path]) -> List[Utterance]:
    """Read a JSON-lines transcript; utterance ids follow line order."""
    utterances = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                utterances.append(Utterance.from_dict(json.loads(line), utterance_id=len(utterances)))
    return utterances


def write_transcript(path: Union[str, Path], transcript: Sequence[Utterance]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for utt in transcript:
            record = {
                "speaker": utt.speaker.value,
                "text": utt.text,
                "start_time": utt.start_time,
                "label": utt.label.value if utt.label else None,
            }
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


def write_sentences(path: Union[str, Path], sentences: Sequence[Sentence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(json.dumps(s.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
    return path


def read_sentences(path: Union[str, Path]) -> List[Sentence]:
    with open(path, "r", encoding="utf-8") as f:
        return [Sentence.from_dict(json.loads(line)) for line in f if line.strip()]


def group_by_session(sentences: Iterable[Sentence]) -> Dict[str, List[Sentence]]:
    sessions: Dict[str, List[Sentence]] = {}
    for s in sentences:
        sessions.setdefault(s.session_id, []).append(s)
    return sessions
