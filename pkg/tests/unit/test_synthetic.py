"""
Unit Tests for the Synthetic Corpus Generator
"""

import json

import numpy as np
import pytest

from config.constants import BODY_JOINTS
from config.schemas import SyntheticCorpusSpec
from data.extractors.track_io import read_au_csv, read_pose_jsonl
from data.ingestion.manifests import load_manifests
from data.ingestion.transcripts import TranscriptReorganizer, read_transcript
from data.synthetic.generator import SyntheticCorpusGenerator, class_prototypes, generate_synthetic_corpus
from models.transcript import Speaker


def small_spec(**overrides):
    params = dict(
        n_sessions=2,
        client_turns_per_session=4,
        text_dim=6,
        audio_dim=5,
        face_frames=(8, 12),
        body_frames=(14, 18),
        fragment_rate=0.5,
        availability={"text": 1.0, "audio": 1.0, "face": 1.0, "body": 1.0},
    )
    params.update(overrides)
    return SyntheticCorpusSpec(**params)


@pytest.fixture
def corpus(tmp_path):
    summary = generate_synthetic_corpus(small_spec(), np.random.default_rng(0), tmp_path)
    return tmp_path, summary


class TestPrototypes:
    """Tests for class prototypes."""

    def test_orthonormal(self):
        prototypes = class_prototypes(8, np.random.default_rng(0))

        assert prototypes.shape == (3, 8)
        assert np.allclose(prototypes @ prototypes.T, np.eye(3))

    def test_low_dimension_unit_norm(self):
        prototypes = class_prototypes(2, np.random.default_rng(0))

        assert np.allclose(np.linalg.norm(prototypes, axis=1), 1.0)


class TestGenerator:
    """Tests for SyntheticCorpusGenerator."""

    def test_summary(self, corpus):
        root, summary = corpus

        assert summary.n_sessions == 2
        assert summary.n_client_sentences == sum(summary.label_counts.values())
        assert summary.availability_counts["text"] == summary.n_client_sentences
        written = json.loads((root / "corpus.json").read_text(encoding="utf-8"))
        assert written["n_client_sentences"] == summary.n_client_sentences

    def test_manifests_match_reorganized_sentences(self, corpus):
        root, summary = corpus
        manifests = load_manifests(root / "manifests")
        reorganizer = TranscriptReorganizer()

        n_client = 0
        for session_id, manifest in manifests.items():
            sentences = reorganizer.reorganize(
                session_id, read_transcript(root / "transcripts" / f"{session_id}.transcript.jsonl")
            )
            assert set(manifest.sentences) == {s.sentence_id for s in sentences}
            n_client += sum(1 for s in sentences if s.speaker == Speaker.CLIENT)
            for sentence in sentences:
                if sentence.speaker == Speaker.THERAPIST:
                    assert set(manifest.sentences[sentence.sentence_id]) == {"text"}
        assert n_client == summary.n_client_sentences

    def test_fragments_written(self, corpus):
        root, summary = corpus
        merged = 0
        for path in sorted((root / "transcripts").glob("*.transcript.jsonl")):
            sentences = TranscriptReorganizer().reorganize(path.name.split(".")[0], read_transcript(path))
            merged += sum(1 for s in sentences if len(s.source_ids) > 1)

        assert summary.n_fragmented > 0
        assert merged == summary.n_fragmented

    def test_track_files(self, corpus):
        root, _ = corpus
        manifests = load_manifests(root / "manifests")
        paths = [p for m in manifests.values() for entry in m.sentences.values() for p in entry.values()]
        face = [p for p in paths if p.endswith(".au.csv")]
        body = [p for p in paths if p.endswith(".pose.jsonl")]

        assert face and body
        track = read_au_csv(root / face[0])
        assert 8 <= track.n_frames <= 12
        assert not track.missing[0]
        pose = read_pose_jsonl(root / body[0])
        assert 14 <= pose.n_frames <= 18
        assert pose.positions.shape[1] == len(BODY_JOINTS)

    def test_unavailable_modality(self, tmp_path):
        spec = small_spec(availability={"text": 1.0, "audio": 0.0, "face": 0.0, "body": 0.0})

        summary = generate_synthetic_corpus(spec, np.random.default_rng(1), tmp_path)

        assert "audio" not in summary.availability_counts
        assert not (tmp_path / "embeddings" / "audio").exists()
        assert load_manifests(tmp_path / "manifests")["s000"].modalities == ["text"]

    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            generate_synthetic_corpus(small_spec(), np.random.default_rng(7), tmp_path / name)

        for path in sorted((tmp_path / "a" / "transcripts").iterdir()):
            assert path.read_bytes() == (tmp_path / "b" / "transcripts" / path.name).read_bytes()

    def test_prototypes_follow_dimensions(self):
        generator = SyntheticCorpusGenerator(small_spec(), np.random.default_rng(0))

        assert generator.text_prototypes.shape == (3, 6)
        assert generator.audio_prototypes.shape == (3, 5)
        assert generator.label_probabilities.sum() == pytest.approx(1.0)
