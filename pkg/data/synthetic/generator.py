"""
Synthetic Multimodal Corpus

Generates counseling-style sessions in the same on-disk formats as a real
corpus: transcripts, sentence embeddings, AU tracks, pose tracks and raw
manifests. Each client sentence draws a label from the configured
proportions; every raw modality is available with its configured rate and
carries class signal scaled by its informativeness.

Embedding modalities: x = s * u_label + N(0, I / d), with unit class
prototypes u. Face: upper-face AU levels shifted by a class pattern. Body:
wrist spread and arm oscillation depend on the class.

Some client sentences are split by a therapist backchannel, with FN on the
first fragment, so that reorganization and label resolution are exercised.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from config.constants import (
    AU_COLUMNS,
    BODY_JOINTS,
    FACE_CHANNELS,
    GAZE_COLUMNS,
    LABEL_ORDER,
    TRANSCRIPT_SUFFIX,
)
from config.schemas import RAW_MODALITIES, SyntheticCorpusSpec
from data.extractors.track_io import write_au_csv, write_pose_jsonl
from data.ingestion.embeddings import write_embedding
from data.ingestion.manifests import SessionManifest
from data.ingestion.transcripts import sentence_id, write_transcript
from models.modality import MiscLabel
from models.tracks import AUTrack, KeypointTrack
from models.transcript import Speaker, Utterance
from utils.stamping import Stamp, write_json

logger = logging.getLogger(__name__)

VOCABULARY = (
    "i think about the week work family smoking drinking maybe really want change time feel "
    "home doctor plan try stop keep going would could because when things little more less "
    "tired money kids friends mornings evenings habit health sleep walk cigarettes wife job"
).split()
BACKCHANNELS = ("mm-hmm", "yeah", "uh-huh", "mm", "okay")
LOWER_FACE_EXTRAS = ("AU12_r", "AU25_r")

# Per-class direction of the body cues (CT, ST, FN)
BODY_CLASS_DIRECTION = np.array([1.0, -1.0, 0.0])


@dataclass
class CorpusSummary:
    """Counts of a generated corpus."""

    n_sessions: int
    n_client_sentences: int
    label_counts: Dict[str, int] = field(default_factory=dict)
    availability_counts: Dict[str, int] = field(default_factory=dict)
    n_fragmented: int = 0

    def to_dict(self) -> Dict:
        return {
            "n_sessions": self.n_sessions,
            "n_client_sentences": self.n_client_sentences,
            "label_counts": dict(self.label_counts),
            "availability_counts": dict(self.availability_counts),
            "n_fragmented": self.n_fragmented,
        }


def class_prototypes(dim: int, rng: np.random.Generator) -> np.ndarray:
    """(3, dim) unit vectors; orthonormal when dim >= 3."""
    raw = rng.normal(size=(dim, len(LABEL_ORDER)))
    if dim >= len(LABEL_ORDER):
        q, _ = np.linalg.qr(raw)
        return q.T
    return (raw / np.linalg.norm(raw, axis=0, keepdims=True)).T


def embedding_sample(prototype: np.ndarray, strength: float, rng: np.random.Generator) -> np.ndarray:
    d = prototype.size
    return strength * prototype + rng.normal(scale=1.0 / np.sqrt(d), size=d)


class SyntheticCorpusGenerator:
    """
    Writes a synthetic corpus under one data directory.

    Layout:
        transcripts/<session>.transcript.jsonl
        embeddings/{text,audio}/<sentence>.emb.f32 (+ .emb.json)
        tracks/face/<sentence>.au.csv
        tracks/body/<sentence>.pose.jsonl
        manifests/<session>.json
        corpus.json
    """

    def __init__(self, spec: SyntheticCorpusSpec, rng: np.random.Generator, stamp: Stamp = None):
        self.spec = spec
        self.rng = rng
        self.stamp = stamp
        self.text_prototypes = class_prototypes(spec.text_dim, rng)
        self.audio_prototypes = class_prototypes(spec.audio_dim, rng)
        self.face_pattern = rng.normal(size=(len(LABEL_ORDER), len(AU_COLUMNS)))
        self.label_probabilities = np.array([spec.class_proportions[name] for name in LABEL_ORDER])

    # ----- text -----

    def _words(self, low: int, high: int) -> List[str]:
        n = int(self.rng.integers(low, high + 1))
        return [VOCABULARY[i] for i in self.rng.integers(0, len(VOCABULARY), size=n)]

    def _sentence_text(self) -> str:
        words = self._words(5, 12)
        return " ".join(words).capitalize() + "."

    def _fragments(self) -> Tuple[str, str]:
        words = self._words(6, 12)
        cut = int(self.rng.integers(3, len(words) - 2))
        return " ".join(words[:cut]).capitalize(), " ".join(words[cut:]) + "."

    # ----- signals -----

    def _signal(self, modality: str, label: MiscLabel) -> float:
        return self.spec.signal(modality, label.value)

    def face_track(self, label: MiscLabel) -> Tuple[AUTrack, Dict[str, np.ndarray]]:
        low, high = self.spec.face_frames
        n = int(self.rng.integers(low, high + 1))
        strength = self._signal("face", label)
        values = np.zeros((n, len(FACE_CHANNELS)))
        au_level = 1.5 + 0.5 * strength * self.face_pattern[label.index]
        noise = self.rng.normal(scale=0.3, size=(n, len(AU_COLUMNS)))
        values[:, :len(AU_COLUMNS)] = np.clip(au_level + noise, 0.0, 5.0)
        values[:, len(AU_COLUMNS):len(AU_COLUMNS) + len(GAZE_COLUMNS)] = self.rng.normal(scale=0.1, size=(n, 2))
        values[:, len(AU_COLUMNS) + len(GAZE_COLUMNS):] = self.rng.normal(scale=0.05, size=(n, 6))
        missing = self.rng.random(n) < self.spec.missing_frame_rate
        missing[0] = False
        values[missing] = 0.0
        extras = {name: np.round(self.rng.uniform(0.0, 5.0, size=n), 3) for name in LOWER_FACE_EXTRAS}
        timestamps = np.arange(n) / self.spec.fps
        return AUTrack(values=values, missing=missing, timestamps=timestamps), extras

    def body_track(self, label: MiscLabel) -> KeypointTrack:
        low, high = self.spec.body_frames
        n = int(self.rng.integers(low, high + 1))
        direction = BODY_CLASS_DIRECTION[label.index] * self._signal("body", label)
        t = np.arange(n)
        spread = 0.2 + 0.05 * direction
        swing = 0.03 * (1.0 + 0.5 * direction) * np.sin(2 * np.pi * t / 12.0 + self.rng.uniform(0, 2 * np.pi))
        positions = np.zeros((n, len(BODY_JOINTS), 2))
        positions[:, 0] = np.stack([0.5 - spread - swing, 0.55 + 0.5 * swing], axis=1)
        positions[:, 1] = np.stack([0.5 + spread + swing, 0.55 + 0.5 * swing], axis=1)
        positions[:, 2] = [0.5, 0.3]
        positions[:, 3] = [0.5, 0.7]
        positions += self.rng.normal(scale=0.005, size=positions.shape)
        confidence = self.rng.uniform(0.6, 1.0, size=(n, len(BODY_JOINTS)))
        dropped = self.rng.random(n) < self.spec.missing_frame_rate
        dropped[0] = False
        confidence[dropped] = 0.1
        return KeypointTrack(positions=np.clip(positions, 0.0, 1.0), confidence=confidence, fps=self.spec.fps)

    # ----- sessions -----

    def generate_session(self, session_id: str, data_root: Path, summary: CorpusSummary) -> SessionManifest:
        """Write one session and return its raw manifest."""
        spec = self.spec
        utterances: List[Utterance] = []
        manifest = SessionManifest(
            session_id=session_id,
            modalities=[m for m in RAW_MODALITIES if spec.availability[m] > 0],
            fps=spec.fps,
        )
        clock = 0.0
        k = 0

        def say(speaker: Speaker, text: str, label: MiscLabel = None) -> None:
            nonlocal clock
            utterances.append(Utterance(speaker=speaker, text=text, start_time=round(clock, 3), label=label))
            clock += 0.3 + 0.35 * len(text.split())

        def embed(modality: str, sid: str, vector: np.ndarray) -> None:
            rel = f"embeddings/{modality}/{sid}.emb.f32"
            write_embedding(data_root / rel, vector, sid)
            manifest.sentences.setdefault(sid, {})[modality] = rel

        for _ in range(spec.client_turns_per_session):
            for _ in range(int(self.rng.integers(1, 3))):
                sid = sentence_id(session_id, k)
                k += 1
                say(Speaker.THERAPIST, self._sentence_text())
                if self.rng.random() < spec.availability["text"]:
                    embed("text", sid, embedding_sample(self.text_prototypes[0], 0.0, self.rng))

            for _ in range(int(self.rng.integers(1, spec.max_sentences_per_turn + 1))):
                sid = sentence_id(session_id, k)
                k += 1
                label = MiscLabel.from_index(self.rng.choice(len(LABEL_ORDER), p=self.label_probabilities))
                if self.rng.random() < spec.fragment_rate:
                    head, tail = self._fragments()
                    head_label = MiscLabel.FN if self.rng.random() < 0.5 else label
                    say(Speaker.CLIENT, head, head_label)
                    say(Speaker.THERAPIST, str(self.rng.choice(BACKCHANNELS)).capitalize())
                    say(Speaker.CLIENT, tail, label)
                    summary.n_fragmented += 1
                else:
                    say(Speaker.CLIENT, self._sentence_text(), label)
                self._write_client_modalities(sid, label, data_root, manifest, embed, summary)
                summary.n_client_sentences += 1
                summary.label_counts[label.value] = summary.label_counts.get(label.value, 0) + 1

        write_transcript(data_root / "transcripts" / f"{session_id}{TRANSCRIPT_SUFFIX}", utterances)
        return manifest

    def _write_client_modalities(self, sid, label, data_root, manifest, embed, summary) -> None:
        spec = self.spec
        for modality in RAW_MODALITIES:
            if self.rng.random() >= spec.availability[modality]:
                continue
            summary.availability_counts[modality] = summary.availability_counts.get(modality, 0) + 1
            strength = self._signal(modality, label)
            if modality == "text":
                embed("text", sid, embedding_sample(self.text_prototypes[label.index], strength, self.rng))
            elif modality == "audio":
                embed("audio", sid, embedding_sample(self.audio_prototypes[label.index], strength, self.rng))
            elif modality == "face":
                track, extras = self.face_track(label)
                rel = f"tracks/face/{sid}.au.csv"
                write_au_csv(data_root / rel, track, extras)
                manifest.sentences.setdefault(sid, {})["face"] = rel
            else:
                rel = f"tracks/body/{sid}.pose.jsonl"
                write_pose_jsonl(data_root / rel, self.body_track(label))
                manifest.sentences.setdefault(sid, {})["body"] = rel

    def generate(self, data_root: Union[str, Path]) -> CorpusSummary:
        """
        Write the full corpus.

        Args:
            data_root: Output data directory

        Returns:
            CorpusSummary with label and availability counts
        """
        data_root = Path(data_root)
        summary = CorpusSummary(n_sessions=self.spec.n_sessions, n_client_sentences=0)
        for i in range(self.spec.n_sessions):
            manifest = self.generate_session(f"s{i:03d}", data_root, summary)
            manifest.save(data_root / "manifests", self.stamp)
        payload = {"spec": self.spec.model_dump(mode="json"), **summary.to_dict()}
        write_json(data_root / "corpus.json", payload, self.stamp)
        logger.info(
            f"Generated {summary.n_client_sentences} client sentences in {summary.n_sessions} sessions "
            f"({summary.n_fragmented} fragmented)"
        )
        return summary


def generate_synthetic_corpus(
    spec: SyntheticCorpusSpec,
    rng: np.random.Generator,
    data_root: Union[str, Path],
    stamp: Stamp = None,
) -> CorpusSummary:
    """Generate a corpus described by `spec` under `data_root`."""
    return SyntheticCorpusGenerator(spec, rng, stamp).generate(data_root)
