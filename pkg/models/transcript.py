"""
Transcript Models

Utterances as read from `*.transcript.jsonl` files and the speaker sentences
rebuilt from them.
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from models.modality import MiscLabel


class Speaker(str, Enum):
    CLIENT = "client"
    THERAPIST = "therapist"


@dataclass(frozen=True)
class Utterance:
    """
    One transcript line.

    Attributes:
        speaker: Who spoke
        text: Utterance text as transcribed
        start_time: Start time in seconds
        label: MISC label, only for client utterances
        is_backchannel: Set when flagged as a listener interjection
        utterance_id: Position in the original transcript (reading order)
        follows_interruption: Set on the utterance that resumes a sentence
            after a removed backchannel
    """

    speaker: Speaker
    text: str
    start_time: float
    label: Optional[MiscLabel] = None
    is_backchannel: bool = False
    utterance_id: int = 0
    follows_interruption: bool = False

    def __post_init__(self):
        if not isinstance(self.speaker, Speaker):
            object.__setattr__(self, "speaker", Speaker(self.speaker))
        if self.label is not None and not isinstance(self.label, MiscLabel):
            object.__setattr__(self, "label", MiscLabel(self.label))
        if self.start_time < 0:
            raise ValueError(f"start_time must be >= 0, got {self.start_time}")
        if self.label is not None and self.speaker != Speaker.CLIENT:
            raise ValueError(
                f"Utterance {self.utterance_id}: only client utterances carry a label"
            )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["speaker"] = self.speaker.value
        data["label"] = self.label.value if self.label else None
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], utterance_id: Optional[int] = None) -> "Utterance":
        return cls(
            speaker=Speaker(data["speaker"]),
            text=str(data["text"]),
            start_time=float(data["start_time"]),
            label=MiscLabel(data["label"]) if data.get("label") else None,
            is_backchannel=bool(data.get("is_backchannel", False)),
            utterance_id=int(data["utterance_id"]) if utterance_id is None else utterance_id,
            follows_interruption=bool(data.get("follows_interruption", False)),
        )


@dataclass
class Sentence:
    """
    A speaker sentence rebuilt from one or more utterances.

    Attributes:
        speaker: Who spoke
        text: Concatenated utterance texts
        label: Resolved MISC label (client sentences only)
        source_ids: utterance_id of every merged utterance, increasing
        turn_id: Speaking turn index within the session
        position_in_turn: Sentence index within the turn
        sentence_id: Stable id, "<session>-<k:04d>"
    """

    speaker: Speaker
    text: str
    label: Optional[MiscLabel]
    source_ids: List[int]
    turn_id: int
    position_in_turn: int
    sentence_id: str = ""
    source_labels: List[Optional[MiscLabel]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.source_ids:
            raise ValueError("Sentence must merge at least one utterance")
        if any(b <= a for a, b in zip(self.source_ids, self.source_ids[1:])):
            raise ValueError(f"source_ids must be strictly increasing, got {self.source_ids}")
        if self.turn_id < 0 or self.position_in_turn < 0:
            raise ValueError("turn_id and position_in_turn must be non-negative")

    @property
    def session_id(self) -> str:
        return self.sentence_id.rsplit("-", 1)[0] if self.sentence_id else ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sentence_id": self.sentence_id,
            "speaker": self.speaker.value,
            "text": self.text,
            "label": self.label.value if self.label else None,
            "source_ids": list(self.source_ids),
            "turn_id": self.turn_id,
            "position_in_turn": self.position_in_turn,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Sentence":
        return cls(
            speaker=Speaker(data["speaker"]),
            text=data["text"],
            label=MiscLabel(data["label"]) if data.get("label") else None,
            source_ids=[int(i) for i in data["source_ids"]],
            turn_id=int(data["turn_id"]),
            position_in_turn=int(data["position_in_turn"]),
            sentence_id=data.get("sentence_id", ""),
        )
