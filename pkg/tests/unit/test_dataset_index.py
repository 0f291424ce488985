"""
Unit Tests for the Dataset Index and Dataset Loading
"""

import numpy as np
import pandas as pd
import pytest

from config.constants import BODY_CHANNELS
from data.ingestion.dataset import MultimodalDataset, full_modality_samples, iter_batches, restrict
from data.ingestion.embeddings import embedding_dim, read_embedding, write_embedding
from data.ingestion.index_builder import (
    DatasetIndexBuilder,
    build_dataset_index,
    client_context_sentences,
    mask_statistics,
    therapist_context_sentences,
)
from data.ingestion.manifests import SessionManifest, declared_modalities, flatten, load_manifests
from data.ingestion.transcripts import TranscriptReorganizer
from models.modality import MiscLabel, ModalityId
from models.transcript import Speaker, Utterance
from utils.errors import IndexingError, ShapeError
from utils.stamping import write_csv

C, T = Speaker.CLIENT, Speaker.THERAPIST


def session_sentences(session_id):
    rows = [
        (T, "What brings you here today?", None),
        (T, "Take your time.", None),
        (C, "My doctor sent me.", MiscLabel.FN),
        (C, "I want to drink less.", MiscLabel.CT),
        (T, "What would that look like?", None),
        (C, "I like my evening beer.", MiscLabel.ST),
    ]
    transcript = [
        Utterance(speaker=s, text=text, start_time=float(i), label=label, utterance_id=i)
        for i, (s, text, label) in enumerate(rows)
    ]
    return TranscriptReorganizer().reorganize(session_id, transcript)


@pytest.fixture
def corpus(tmp_path):
    """Two sessions with text for every sentence, audio and body for some."""
    manifests = {}
    sentences = {}
    for session in ("s000", "s001"):
        sentences[session] = session_sentences(session)
        manifest = SessionManifest(session_id=session, modalities=["text", "audio", "body"])
        for k, sentence in enumerate(sentences[session]):
            sid = sentence.sentence_id
            rel = f"embeddings/text/{sid}.emb.f32"
            write_embedding(tmp_path / rel, np.full(4, float(k)), sid)
            manifest.sentences.setdefault(sid, {})["text"] = rel
            if sentence.speaker == C and k != 3:
                rel = f"embeddings/audio/{sid}.emb.f32"
                write_embedding(tmp_path / rel, np.ones(3), sid)
                manifest.sentences[sid]["audio"] = rel
        body_sid = f"{session}-0002"
        rel = f"features/body/{body_sid}.feat.csv"
        write_csv(tmp_path / rel, pd.DataFrame(np.ones((12, 2)), columns=BODY_CHANNELS))
        manifest.sentences[body_sid]["body"] = rel
        manifest.save(tmp_path / "manifests")
        manifests[session] = manifest
    return tmp_path, sentences, manifests


class TestEmbeddings:
    """Tests for the binary embedding format."""

    def test_round_trip_float32(self, tmp_path):
        vector = np.array([0.1, -2.5, 3.0])

        path = write_embedding(tmp_path / "a.emb.f32", vector, "s000-0001")

        assert np.allclose(read_embedding(path), vector.astype(np.float32))
        assert embedding_dim(path) == 3
        assert path.stat().st_size == 12

    def test_expected_dim(self, tmp_path):
        path = write_embedding(tmp_path / "a.emb.f32", np.zeros(5), "x")

        with pytest.raises(ShapeError):
            read_embedding(path, expected_dim=4)

    def test_rejects_matrix(self, tmp_path):
        with pytest.raises(ShapeError):
            write_embedding(tmp_path / "a.emb.f32", np.zeros((2, 2)), "x")


class TestContexts:
    """Tests for context sentence selection."""

    def test_therapist_context_is_previous_turn(self):
        sentences = session_sentences("s000")
        target = sentences[5]

        context = therapist_context_sentences(sentences, target.turn_id)

        assert [s.sentence_id for s in context] == ["s000-0004"]

    def test_therapist_context_token_bound(self):
        sentences = session_sentences("s000")

        context = therapist_context_sentences(sentences, sentences[2].turn_id, max_tokens=3)

        assert [s.sentence_id for s in context] == ["s000-0001"]

    def test_therapist_context_keeps_last_sentence(self):
        sentences = session_sentences("s000")

        context = therapist_context_sentences(sentences, sentences[2].turn_id, max_tokens=1)

        assert [s.sentence_id for s in context] == ["s000-0001"]

    def test_no_previous_therapist_turn(self):
        sentences = session_sentences("s000")

        assert therapist_context_sentences(sentences, 0) == []

    def test_client_context(self):
        sentences = session_sentences("s000")

        assert [s.sentence_id for s in client_context_sentences(sentences, sentences[3])] == ["s000-0002"]
        assert client_context_sentences(sentences, sentences[2]) == []


class TestIndexBuilder:
    """Tests for DatasetIndexBuilder."""

    def test_manifests_round_trip(self, corpus):
        root, _, manifests = corpus

        loaded = load_manifests(root / "manifests")

        assert sorted(loaded) == ["s000", "s001"]
        assert loaded["s000"].to_dict() == manifests["s000"].to_dict()
        assert set(declared_modalities(loaded)) == {"text", "audio", "body"}

    def test_only_labeled_client_sentences(self, corpus):
        root, sentences, manifests = corpus

        index = build_dataset_index(sentences, flatten(manifests), root, ["text", "audio", "body"])

        assert len(index) == 6
        assert [e.label for e in index.entries[:3]] == [MiscLabel.FN, MiscLabel.CT, MiscLabel.ST]

    def test_contexts_added_with_text(self, corpus):
        root, sentences, manifests = corpus

        index = build_dataset_index(sentences, flatten(manifests), root, ["text", "audio"])

        assert ModalityId.CLIENT_CONTEXT in index.modalities
        entry = {e.sentence_id: e for e in index.entries}["s000-0003"]
        assert entry.paths["client_context"] == ["embeddings/text/s000-0002.emb.f32"]
        assert entry.paths["therapist_context"] == [
            "embeddings/text/s000-0000.emb.f32",
            "embeddings/text/s000-0001.emb.f32",
        ]
        assert not entry.available("audio")

    def test_undeclared_modality_ignored(self, corpus):
        root, sentences, manifests = corpus

        index = build_dataset_index(sentences, flatten(manifests), root, ["audio"])

        assert index.modalities == (ModalityId.AUDIO,)
        assert all(set(e.paths) <= {"audio"} for e in index.entries)

    def test_missing_file_raises(self, corpus):
        root, sentences, manifests = corpus
        (root / "embeddings" / "audio" / "s001-0005.emb.f32").unlink()

        with pytest.raises(IndexingError) as excinfo:
            build_dataset_index(sentences, flatten(manifests), root)

        assert excinfo.value.details["sentence_id"] == "s001-0005"

    def test_mask_statistics(self, corpus):
        root, sentences, manifests = corpus
        index = DatasetIndexBuilder(root, ["text", "audio", "body"]).build(sentences, flatten(manifests))

        stats = mask_statistics(index).set_index("modality")

        assert stats.loc["text", "available"] == 6
        assert stats.loc["audio", "available"] == 4
        assert stats.loc["body", "available"] == 2
        assert stats.loc["body", "FN"] == 2
        assert stats.loc["face", "share"] == 0.0


class TestMultimodalDataset:
    """Tests for dataset loading and batching."""

    @pytest.fixture
    def dataset(self, corpus):
        root, sentences, manifests = corpus
        index = build_dataset_index(sentences, flatten(manifests), root, ["text", "audio", "body"])
        return MultimodalDataset.load(index.save(root / "index.json"))

    def test_payloads(self, dataset):
        sample = {s.sentence_id: s for s in dataset.samples}["s000-0003"]

        assert sample.label == MiscLabel.CT.index
        assert np.allclose(sample.payloads[ModalityId.TEXT], 3.0)
        # Therapist context averages sentences 0 and 1
        assert np.allclose(sample.payloads[ModalityId.THERAPIST_CONTEXT], 0.5)
        assert ModalityId.AUDIO not in sample.payloads

    def test_sequence_payload(self, dataset):
        sample = {s.sentence_id: s for s in dataset.samples}["s001-0002"]

        assert sample.payloads[ModalityId.BODY].shape == (12, 2)

    def test_input_dims(self, dataset):
        dims = dataset.input_dims()

        assert dims["text"] == 4
        assert dims["audio"] == 3
        assert dims["body"] == 2

    def test_session_split(self, dataset):
        train, val, val_sessions = dataset.split(np.random.default_rng(0))

        assert len(val_sessions) == 1
        assert {s.session_id for s in val} == set(val_sessions)
        assert not {s.session_id for s in train} & set(val_sessions)
        assert len(train) + len(val) == len(dataset)

    def test_restrict_and_batches(self, dataset):
        samples = restrict(dataset.samples, ["text"])

        assert all(set(s.payloads) == {ModalityId.TEXT} for s in samples)
        assert [len(b) for b in iter_batches(samples, 4)] == [4, 2]

    def test_full_modality_samples(self, dataset):
        full = full_modality_samples(dataset.samples, [ModalityId.TEXT, ModalityId.BODY])

        assert sorted(s.sentence_id for s in full) == ["s000-0002", "s001-0002"]
