"""
Unit Tests for Models Module
"""

import numpy as np
import pytest

from models.dataset import Batch, DatasetEntry, DatasetIndex, MultimodalSample
from models.fusion import AttentionMatrix, DockedEmbedding, FusionOutput, SelectionMap, SelectionMode
from models.modality import (
    MiscLabel,
    ModalityId,
    label_indices,
    ordered_modalities,
    parse_modalities,
)
from models.report import ClusterReport, EvalReport, SpecializationReport
from models.tracks import AUTrack, BodyFeatureTrack, KeypointTrack
from models.transcript import Sentence, Speaker, Utterance
from utils.errors import ParameterError


class TestModalities:
    """Tests for modality and label enumerations."""

    def test_fixed_indices(self):
        assert ModalityId.TEXT.index == 0
        assert ModalityId.BODY.index == 5
        assert ModalityId.FACE.is_sequence
        assert ModalityId.AUDIO.is_embedding
        assert ModalityId.CLIENT_CONTEXT.is_context

    def test_ordered_modalities_sorts_and_deduplicates(self):
        result = ordered_modalities(["body", "text", "body", ModalityId.AUDIO])

        assert result == (ModalityId.TEXT, ModalityId.AUDIO, ModalityId.BODY)

    def test_unknown_modality(self):
        with pytest.raises(ParameterError):
            ordered_modalities(["smell"])

    def test_parse_flag(self):
        assert parse_modalities("face, text") == (ModalityId.TEXT, ModalityId.FACE)
        assert parse_modalities(None) is None

    def test_label_indices(self):
        assert label_indices(["CT", MiscLabel.FN, 1]) == [0, 2, 1]
        assert MiscLabel.from_index(1) == MiscLabel.ST

    def test_label_out_of_range(self):
        with pytest.raises(ParameterError):
            label_indices([3])


class TestTranscriptModels:
    """Tests for Utterance and Sentence."""

    def test_utterance_round_trip(self):
        utterance = Utterance(speaker="client", text="I want to stop.", start_time=1.5, label="CT", utterance_id=4)

        restored = Utterance.from_dict(utterance.to_dict())

        assert restored == utterance
        assert restored.speaker is Speaker.CLIENT

    def test_therapist_utterance_cannot_carry_label(self):
        with pytest.raises(ValueError):
            Utterance(speaker=Speaker.THERAPIST, text="Okay.", start_time=0.0, label=MiscLabel.CT)

    def test_negative_start_time(self):
        with pytest.raises(ValueError):
            Utterance(speaker=Speaker.CLIENT, text="Hi.", start_time=-1.0)

    def test_sentence_source_ids_increase(self):
        with pytest.raises(ValueError):
            Sentence(Speaker.CLIENT, "a", MiscLabel.FN, source_ids=[3, 2], turn_id=0, position_in_turn=0)

    def test_sentence_session_id(self):
        sentence = Sentence(
            Speaker.CLIENT, "a", None, source_ids=[0], turn_id=0, position_in_turn=0, sentence_id="s-01-0003"
        )

        assert sentence.session_id == "s-01"


class TestTrackModels:
    """Tests for track containers."""

    def test_keypoint_shape_checked(self):
        with pytest.raises(ValueError):
            KeypointTrack(positions=np.zeros((5, 3, 2)), confidence=np.ones((5, 3)))

    def test_keypoint_confidence_range(self):
        with pytest.raises(ValueError):
            KeypointTrack(positions=np.zeros((2, 4, 2)), confidence=np.full((2, 4), 1.5))

    def test_au_intensity_range(self):
        values = np.zeros((3, 16))
        values[1, 0] = 7.0

        with pytest.raises(ValueError):
            AUTrack(values=values, missing=np.zeros(3, dtype=bool), timestamps=np.arange(3) / 25)

    def test_au_missing_frames_not_range_checked(self):
        values = np.zeros((3, 16))
        values[1, 0] = 7.0
        missing = np.array([False, True, False])

        track = AUTrack(values=values, missing=missing, timestamps=np.arange(3) / 25)

        assert track.n_frames == 3

    def test_body_features_matrix(self):
        track = BodyFeatureTrack(amplitude=[0.5, np.nan], qom=[0.1, np.nan])

        assert track.to_matrix().shape == (2, 2)

    def test_negative_amplitude(self):
        with pytest.raises(ValueError):
            BodyFeatureTrack(amplitude=[-0.1], qom=[0.0])


class TestFusionModels:
    """Tests for fusion views."""

    def test_unavailable_docks_to_zero(self):
        with pytest.raises(ValueError):
            DockedEmbedding(ModalityId.AUDIO, np.ones(4), available=False)

    def test_attention_columns_sum_to_one(self):
        p = np.array([[0.5, 1.0], [0.5, 0.0], [0.0, 0.0]])

        matrix = AttentionMatrix(p=p, available=[True, True, False])

        assert matrix.p.shape == (3, 2)

    def test_attention_masked_row_must_be_zero(self):
        p = np.array([[0.5, 1.0], [0.5, 0.0]])

        with pytest.raises(ValueError):
            AttentionMatrix(p=p, available=[True, False])

    def test_selection_map_counts(self):
        selection = SelectionMap(chosen=[0, 1, 1, 2], mode="argmax", modalities=["text", "audio", "face"])

        assert selection.dim == 4
        assert selection.counts().tolist() == [1, 2, 1]
        assert SelectionMap.from_dict(selection.to_dict()).chosen.tolist() == [0, 1, 1, 2]

    def test_selection_out_of_range(self):
        with pytest.raises(ValueError):
            SelectionMap(chosen=[0, 3], mode=SelectionMode.SAMPLED, modalities=["text", "audio"])

    def test_fusion_output_consistency(self):
        docked = [
            DockedEmbedding(ModalityId.TEXT, np.array([1.0, 2.0]), True),
            DockedEmbedding(ModalityId.AUDIO, np.array([3.0, 4.0]), True),
        ]
        attention = AttentionMatrix(p=np.array([[0.6, 0.3], [0.4, 0.7]]), available=[True, True])
        selection = SelectionMap(chosen=[0, 1], mode="argmax", modalities=["text", "audio"])

        output = FusionOutput(np.array([1.0, 4.0]), np.zeros(3), selection, attention, docked)
        assert output.fused.tolist() == [1.0, 4.0]

        with pytest.raises(ValueError):
            FusionOutput(np.array([3.0, 4.0]), np.zeros(3), selection, attention, docked)


class TestDatasetModels:
    """Tests for dataset index and batches."""

    def _entry(self, sid, label="CT", **paths):
        return DatasetEntry(
            sentence_id=sid, session_id=sid.rsplit("-", 1)[0], label=label,
            turn_id=0, position_in_turn=0, paths=paths,
        )

    def test_entry_mask(self):
        entry = self._entry("s000-0001", text=["embeddings/text/a.emb.f32"])

        assert entry.available("text")
        assert not entry.available("audio")
        assert entry.mask["text"] is True

    def test_index_rejects_duplicates(self):
        with pytest.raises(ValueError):
            DatasetIndex(entries=[self._entry("s000-0001"), self._entry("s000-0001")])

    def test_index_save_load(self, tmp_path):
        index = DatasetIndex(
            entries=[self._entry("s000-0001", text=["t.emb.f32"]), self._entry("s001-0002", "FN")],
            modalities=["text", "audio"],
        )

        loaded = DatasetIndex.load(index.save(tmp_path / "index.json"))

        assert len(loaded) == 2
        assert loaded.sessions() == ["s000", "s001"]
        assert loaded.labels().tolist() == [0, 2]
        assert loaded.mask_matrix()[:, 0].tolist() == [True, False]
        assert loaded.root == tmp_path

    def test_sample_rejects_non_finite(self):
        with pytest.raises(ValueError):
            MultimodalSample("a", "s", 0, {"text": np.array([np.nan])})

    def test_sample_without(self):
        sample = MultimodalSample("a", "s", 1, {"text": np.ones(3), "audio": np.ones(2)})

        reduced = sample.without(["audio"])

        assert reduced.mask.tolist() == [True, False, False, False, False, False]
        assert sample.has_all([ModalityId.TEXT, ModalityId.AUDIO])

    def test_batch_from_samples(self):
        samples = [
            MultimodalSample("a", "s", 0, {"text": np.ones(3)}),
            MultimodalSample("b", "s", 2, {"text": np.ones(3), "face": np.ones((4, 16))}),
        ]

        batch = Batch.from_samples(samples)

        assert len(batch) == 2
        assert batch.labels.tolist() == [0, 2]
        assert batch.payloads[ModalityId.FACE][0] is None
        assert batch.column(ModalityId.FACE).tolist() == [False, True]


class TestReportModels:
    """Tests for report containers."""

    def _report(self, ci_macro=(0.4, 0.6)):
        return EvalReport(
            f1={"CT": 0.5, "ST": 0.5, "FN": 0.5},
            f1_micro=0.5,
            f1_macro=0.5,
            ci={"macro": ci_macro},
            confusion=[[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
            confusion_counts=[[1, 1, 0], [0, 2, 0], [0, 0, 0]],
            n_samples=4,
        )

    def test_eval_report_valid(self):
        report = self._report()

        assert report.point("macro") == 0.5
        assert report.to_dict()["ci"]["macro"] == [0.4, 0.6]

    def test_ci_must_contain_point(self):
        with pytest.raises(ValueError):
            self._report(ci_macro=(0.6, 0.7))

    def test_specialization_flags(self):
        report = SpecializationReport(
            frequencies=np.array([[1.0, 0.5], [0.0, 0.5]]),
            specialized=np.array([[True, False], [False, False]]),
            dead=np.array([[False, False], [True, False]]),
            modalities=["text", "audio"],
        )

        assert report.flagged("specialized") == [("text", 0)]
        assert report.flagged("dead") == [("audio", 0)]

    def test_cluster_report_silhouette_range(self):
        with pytest.raises(ValueError):
            ClusterReport(k=2, assignments=np.array([0, 1]), centroids=np.zeros((2, 2)), silhouette=1.5, inertia={})
