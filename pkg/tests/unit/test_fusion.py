"""
Unit Tests for Encoders, Fusion and Classifiers
"""

import json

import numpy as np
import pytest
from scipy import stats

from config.schemas import EncoderSpec, ModelConfig
from core import ops
from core.autograd import Value
from core.checkpoint import load_checkpoint, save_checkpoint
from core.classifier import ConcatClassifier, MaleficClassifier, UnimodalClassifier, build_model
from core.encoders import EmbeddingEncoder, ModalityBranch, SequenceEncoder
from core.fusion import (
    MaleficFusion,
    fusion_backward,
    modality_dropout,
    select_modalities,
    straight_through_select,
)
from core.gradcheck import grad_check
from models.dataset import Batch, MultimodalSample
from models.fusion import SelectionMode
from models.modality import ModalityId
from utils.errors import CheckpointError, FusionStateError, NoAvailableModalityError, ShapeError

INPUT_DIMS = {"text": 5, "audio": 4, "face": 3}


def make_samples(n=6, seed=0):
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        payloads = {"text": rng.normal(size=5)}
        if i % 2 == 0:
            payloads["audio"] = rng.normal(size=4)
        if i % 3 != 2:
            payloads["face"] = rng.normal(size=(int(rng.integers(1, 6)), 3))
        samples.append(MultimodalSample(f"s000-{i:04d}", "s000", i % 3, payloads))
    return samples


def model_config(kind="malefic", modalities=("text", "audio", "face")):
    return ModelConfig.for_inputs(kind, modalities, INPUT_DIMS, fusion_dim=8, output_dims={"face": 6})


@pytest.fixture
def rng():
    return np.random.default_rng(5)


@pytest.fixture
def batch():
    return Batch.from_samples(make_samples())


class TestEncoders:
    """Tests for modality encoders."""

    def test_embedding_encoder_shape(self, rng):
        encoder = EmbeddingEncoder(EncoderSpec.default_for(ModalityId.TEXT, 5), rng).eval()

        assert encoder(np.ones(5)).shape == (30,)
        assert encoder(np.ones((4, 5))).shape == (4, 30)

    def test_embedding_encoder_rejects_wrong_dim(self, rng):
        encoder = EmbeddingEncoder(EncoderSpec.default_for(ModalityId.TEXT, 5), rng)

        with pytest.raises(ShapeError):
            encoder(np.ones(6))

    def test_sequence_encoder_any_length(self, rng):
        spec = EncoderSpec.default_for(ModalityId.BODY, 2)
        encoder = SequenceEncoder(spec, rng).eval()

        assert encoder(np.ones((1, 2))).shape == (8,)
        assert encoder(np.ones((40, 2))).shape == (8,)

    def test_sequence_encoder_rejects_empty(self, rng):
        encoder = SequenceEncoder(EncoderSpec.default_for(ModalityId.BODY, 2), rng)

        with pytest.raises(ShapeError):
            encoder(np.zeros((0, 2)))
        with pytest.raises(ShapeError):
            encoder(np.zeros((5, 3)))

    def test_eval_mode_is_deterministic(self, rng):
        encoder = SequenceEncoder(EncoderSpec.default_for(ModalityId.FACE, 3, output_dim=6), rng).eval()
        x = np.random.default_rng(1).normal(size=(7, 3))

        assert np.array_equal(encoder(x).data, encoder(x).data)

    def test_sequence_encoder_gradients(self, rng):
        spec = EncoderSpec(modality=ModalityId.FACE, input_dim=3, hidden_dim=4, output_dim=5, key_dim=2)
        encoder = SequenceEncoder(spec, rng).eval()
        x = np.random.default_rng(2).normal(size=(6, 3))
        weights = np.random.default_rng(3).normal(size=5)

        def fn(*_):
            return ops.sum(ops.mul(encoder(x), weights))

        assert grad_check(fn, encoder.parameters(), sample=6) < 1e-3

    def test_sequence_encoder_is_order_aware(self, rng):
        encoder = SequenceEncoder(EncoderSpec.default_for(ModalityId.BODY, 2), rng).eval()
        x = np.random.default_rng(4).normal(size=(12, 2))
        swapped = x.copy()
        swapped[[0, 10]] = x[[10, 0]]

        assert not np.allclose(encoder(x).data, encoder(swapped).data)

    @pytest.mark.parametrize("modality,input_dim", [("text", 768), ("audio", 758), ("client_context", 768)])
    def test_embedding_encoder_parameter_count(self, rng, modality, input_dim):
        encoder = EmbeddingEncoder(EncoderSpec.default_for(ModalityId(modality), input_dim), rng)

        assert encoder.num_parameters() == (input_dim * 30 + 30) + (30 * 30 + 30)

    @pytest.mark.parametrize("modality,channels,out", [("face", 27, 256), ("body", 2, 8)])
    def test_sequence_encoder_parameter_count(self, rng, modality, channels, out):
        encoder = SequenceEncoder(EncoderSpec.default_for(ModalityId(modality), channels), rng)
        filters, width, key = 16, 3, 16
        expected = (
            (width * channels * filters + filters)  # conv1
            + (width * filters * filters + filters)  # conv2
            + 2 * (filters * key + key)  # query, key
            + 2 * (filters * filters + filters)  # value, attention output
            + 2 * filters  # layer norm
            + (filters * out + out)  # projection
        )

        assert encoder.num_parameters() == expected

    def test_docking_parameter_count(self, rng):
        branch = ModalityBranch(EncoderSpec.default_for(ModalityId.BODY, 2), 64, rng)

        assert branch.dock_layer.num_parameters() == 8 * 64 + 64

    def test_unavailable_rows_dock_to_zero(self, rng):
        branch = ModalityBranch(EncoderSpec.default_for(ModalityId.AUDIO, 4), 8, rng).eval()

        docked = branch([np.ones(4), None, np.ones(4)], np.array([True, False, True]))

        assert docked.shape == (3, 8)
        assert not docked.data[1].any()
        assert docked.data[0].any()

    def test_single_dock(self, rng):
        branch = ModalityBranch(EncoderSpec.default_for(ModalityId.AUDIO, 4), 8, rng).eval()

        assert not branch.dock(None).available
        assert not branch.dock(None).vector.any()
        assert branch.dock(np.ones(4)).vector.shape == (8,)


class TestModalityDropout:
    """Tests for modality_dropout."""

    def test_rate_zero_is_identity(self, rng):
        mask = np.array([[True, False, True], [True, True, True]])

        assert np.array_equal(modality_dropout(mask, 0.0, rng), mask)

    def test_rate_one_keeps_one_survivor(self, rng):
        mask = np.array([[True, False, True], [False, True, False], [True, True, True]])

        for _ in range(20):
            kept = modality_dropout(mask, 1.0, rng)
            assert kept.sum(axis=1).tolist() == [1, 1, 1]
            assert not (kept & ~mask).any()

    def test_rate_one_survivor_is_uniform(self):
        mask = np.ones((10_000, 3), dtype=bool)

        kept = modality_dropout(mask, 1.0, np.random.default_rng(21))

        assert kept.sum(axis=1).tolist() == [1] * 10_000
        counts = kept.sum(axis=0)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_never_adds_modalities(self, rng):
        mask = rng.random((50, 4)) < 0.6
        mask[:, 0] = True

        kept = modality_dropout(mask, 0.5, rng)

        assert not (kept & ~mask).any()
        assert kept.any(axis=1).all()

    def test_empty_sample(self, rng):
        with pytest.raises(NoAvailableModalityError):
            modality_dropout(np.array([[False, False]]), 0.2, rng)


class TestSelection:
    """Tests for per-dimension selection."""

    def test_argmax_ties_go_to_lowest(self):
        p = np.array([[[0.4, 0.1], [0.4, 0.9], [0.2, 0.0]]])

        assert select_modalities(p, SelectionMode.ARGMAX).tolist() == [[0, 1]]

    def test_sampling_follows_probabilities(self, rng):
        p = np.tile(np.array([0.2, 0.0, 0.8])[None, :, None], (5000, 1, 1))

        chosen = select_modalities(p, SelectionMode.SAMPLED, rng)[:, 0]

        assert not (chosen == 1).any()
        assert np.mean(chosen == 0) == pytest.approx(0.2, abs=0.03)

    def test_sampled_frequencies_over_many_draws(self, rng):
        p = np.tile(np.array([0.5, 0.3, 0.2])[None, :, None], (100_000, 1, 1))

        chosen = select_modalities(p, SelectionMode.SAMPLED, rng)[:, 0]

        frequencies = np.bincount(chosen, minlength=3) / chosen.size
        assert np.abs(frequencies - [0.5, 0.3, 0.2]).max() < 0.01

    def test_straight_through_rule(self):
        docked = Value(np.arange(12, dtype=float).reshape(1, 3, 4))
        p = Value(np.full((1, 3, 4), 1.0 / 3))
        chosen = np.array([[0, 2, 1, 2]])

        fused = straight_through_select(docked, p, chosen)
        ops.sum(ops.mul(fused, np.array([1.0, 2.0, 3.0, 4.0]))).backward()

        assert fused.data.tolist() == [[0.0, 9.0, 6.0, 11.0]]
        assert docked.grad[0, :, 1].tolist() == [0.0, 0.0, 2.0]
        assert np.allclose(p.grad[0], docked.data[0] * np.array([1.0, 2.0, 3.0, 4.0]))


class TestMaleficFusion:
    """Tests for MaleficFusion."""

    def test_attention_columns(self, rng):
        fusion = MaleficFusion(3, 8, rng)
        mask = np.array([[True, False, True], [True, True, True]])
        docked = Value(rng.normal(size=(2, 3, 8)) * mask[:, :, None])

        p = fusion.attend(docked, mask).data

        assert np.allclose(p.sum(axis=1), 1.0)
        assert np.all(p[0, 1] == 0.0)
        assert (p[1] > 0).all()

    def test_identical_rows_give_uniform_attention(self, rng):
        fusion = MaleficFusion(3, 8, rng)
        docked = Value(np.tile(rng.normal(size=(1, 1, 8)), (2, 3, 1)))
        mask = np.array([[True, True, True], [True, False, True]])

        p = fusion.attend(docked, mask).data

        assert np.abs(p[0] - 1.0 / 3).max() < 1e-6
        assert np.abs(p[1, [0, 2]] - 0.5).max() < 1e-6
        assert np.all(p[1, 1] == 0.0)

    def test_masking_equals_renormalizing(self, rng):
        fusion = MaleficFusion(3, 8, rng)
        docked = Value(rng.normal(size=(4, 3, 8)))
        full = np.ones((4, 3), dtype=bool)
        masked = full.copy()
        masked[:, 1] = False

        expected = fusion.attend(docked, full).data * masked[:, :, None]
        expected = expected / expected.sum(axis=1, keepdims=True)

        assert np.allclose(fusion.attend(docked, masked).data, expected, rtol=0, atol=1e-12)

    def test_single_modality_gives_zero_attention_gradients(self, rng):
        fusion = MaleficFusion(3, 8, rng)
        docked = Value(rng.normal(size=(3, 3, 8)))
        mask = np.eye(3, dtype=bool)

        trace = fusion(docked, mask, SelectionMode.SAMPLED, np.random.default_rng(0))
        fusion_backward(trace, ops.cross_entropy(trace.logits, [0, 1, 2]))

        assert np.all(trace.attention.data[mask] == 1.0)
        for j in range(3):
            assert np.array_equal(trace.fused.data[j], docked.data[j, j])
        for param in fusion.attention_parameters():
            assert not param.grad.any()
        assert np.abs(fusion.head.weight.grad).sum() > 0

    def test_trace_outputs(self, rng):
        fusion = MaleficFusion(2, 4, rng)
        docked = Value(rng.normal(size=(3, 2, 4)))

        trace = fusion(docked, np.ones((3, 2), dtype=bool), SelectionMode.ARGMAX)

        assert trace.logits.shape == (3, 3)
        assert trace.chosen.shape == (3, 4)
        for i in range(3):
            assert np.allclose(trace.fused.data[i], docked.data[i, trace.chosen[i], np.arange(4)])

    def test_no_available_modality(self, rng):
        fusion = MaleficFusion(2, 4, rng)

        with pytest.raises(NoAvailableModalityError):
            fusion.attend(Value(np.zeros((1, 2, 4))), np.array([[False, False]]))

    def test_backward_requires_live_trace(self, rng):
        fusion = MaleficFusion(2, 4, rng)
        trace = fusion(Value(rng.normal(size=(2, 2, 4))), np.ones((2, 2), dtype=bool), SelectionMode.ARGMAX)
        loss = ops.cross_entropy(trace.logits, [0, 1])

        with pytest.raises(FusionStateError):
            fusion_backward(None, loss)
        fusion_backward(trace, loss)
        with pytest.raises(FusionStateError):
            fusion_backward(trace, loss)


class TestClassifiers:
    """Tests for the classifier models."""

    def test_malefic_eval_forward(self, rng, batch):
        model = MaleficClassifier(model_config(), rng).eval()

        trace = model.forward(batch)
        again = model.forward(batch)

        assert trace.logits.shape == (6, 3)
        assert np.array_equal(trace.logits.data, again.logits.data)
        assert np.array_equal(trace.chosen, again.chosen)
        # Samples without audio never select it
        audio = list(model.modalities).index(ModalityId.AUDIO)
        assert not (trace.chosen[1::2] == audio).any()

    def test_absent_and_masked_give_identical_logits(self, rng):
        model = MaleficClassifier(model_config(), rng).eval()
        samples = make_samples(seed=1)
        full = Batch.from_samples(samples)
        absent = Batch.from_samples([s.without(["audio"]) for s in samples])
        mask = model.availability(full).copy()
        mask[:, list(model.modalities).index(ModalityId.AUDIO)] = False

        docked = model.dock_all(model.encode(full), mask)
        masked = model.fusion(docked, mask, SelectionMode.ARGMAX)

        assert np.array_equal(masked.logits.data, model.predict(absent).logits.data)

    def test_selection_maps(self, rng, batch):
        model = MaleficClassifier(model_config(), rng)

        outputs = model.predict(batch).outputs()

        assert len(outputs) == 6
        assert outputs[0].selection.sample_id == "s000-0000"
        assert outputs[0].selection.dim == 8

    def test_training_loss_populates_gradients(self, rng, batch):
        model = MaleficClassifier(model_config(), rng)

        loss, trace = model.training_loss(batch, np.random.default_rng(0))
        model.backward(loss, trace)

        assert np.isfinite(loss.item())
        assert np.abs(model.fusion.head.weight.grad).sum() > 0
        assert np.abs(model.branches["text"].encoder.fc1.weight.grad).sum() > 0

    def test_head_gradients(self, rng, batch):
        model = MaleficClassifier(model_config(), rng).eval()
        chosen = model.forward(batch).chosen

        def fn(*_):
            trace = model.forward(batch, mode=SelectionMode.ARGMAX, chosen=chosen)
            return ops.cross_entropy(trace.logits, batch.labels)

        assert grad_check(fn, model.fusion.head.parameters()) < 1e-5

    def test_unselected_docked_entries_get_no_gradient(self, rng, batch):
        model = MaleficClassifier(model_config(), rng).eval()

        trace = model.forward(batch)
        model.backward(ops.cross_entropy(trace.logits, batch.labels), trace)

        selected = np.arange(len(model.modalities))[None, :, None] == trace.chosen[:, None, :]
        assert np.all(trace.docked.grad[~selected] == 0.0)
        assert np.abs(trace.docked.grad[selected]).sum() > 0

    def test_attention_gets_straight_through_gradient(self, rng, batch):
        model = MaleficClassifier(model_config(), rng).eval()

        trace = model.forward(batch)
        model.backward(ops.cross_entropy(trace.logits, batch.labels), trace)

        assert np.abs(model.fusion.query.weight.grad).sum() > 0
        assert np.abs(model.fusion.modality_bias.grad).sum() > 0

    @pytest.mark.parametrize("seed", range(3))
    def test_frozen_selection_gradients(self, batch, seed):
        model = MaleficClassifier(model_config(), np.random.default_rng(seed)).eval()
        chosen = model.forward(batch).chosen
        attention = {id(p) for p in model.fusion.attention_parameters()}
        params = [p for p in model.parameters() if id(p) not in attention]

        def fn(*_):
            trace = model.forward(batch, mode=SelectionMode.ARGMAX, chosen=chosen)
            return ops.cross_entropy(trace.logits, batch.labels)

        assert grad_check(fn, params, sample=4, rng=np.random.default_rng(seed)) < 1e-3

    def test_unimodal_skips_missing_rows(self, rng, batch):
        model = UnimodalClassifier(model_config("unimodal", ["text"]), rng)

        assert model.predict_proba(batch).shape == (6, 3)
        assert np.allclose(model.predict_proba(batch).sum(axis=1), 1.0)

    def test_concat_baseline(self, rng, batch):
        model = ConcatClassifier(model_config("concat", ["text", "audio"]), rng)

        assert model.predict(batch).logits.shape == (6, 3)

    def test_build_model(self, rng):
        assert isinstance(build_model(model_config(), rng), MaleficClassifier)


class TestCheckpoint:
    """Tests for checkpoint save/load."""

    def test_round_trip_is_bit_exact(self, tmp_path, rng, batch):
        model = MaleficClassifier(model_config(), rng)

        path = save_checkpoint(tmp_path / "model.ckpt.json", model, stamp={"seed": 1}, validation_sessions=["s000"])
        restored, meta = load_checkpoint(path)

        assert meta["modalities"] == ["text", "audio", "face"]
        assert meta["validation_sessions"] == ["s000"]
        assert np.array_equal(restored.predict(batch).logits.data, model.predict(batch).logits.data)
        for name, data in model.state_dict().items():
            assert np.array_equal(restored.state_dict()[name], data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.json")

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text(json.dumps({"format": "other"}), encoding="utf-8")

        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_parameter(self, tmp_path, rng):
        model = MaleficClassifier(model_config(), rng)
        path = save_checkpoint(tmp_path / "m.json", model)
        payload = json.loads(path.read_text(encoding="utf-8"))
        payload["parameters"].pop("fusion.modality_bias")
        path.write_text(json.dumps(payload), encoding="utf-8")

        with pytest.raises(CheckpointError):
            load_checkpoint(path)
