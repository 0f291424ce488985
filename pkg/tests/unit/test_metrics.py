"""
Unit Tests for Evaluation Metrics and Sampling
"""

import json

import numpy as np
import pytest
from scipy import stats

from config.schemas import EvaluationConfig, ModelConfig
from core.classifier import UnimodalClassifier
from models.dataset import MultimodalSample
from services.evaluator import (
    Evaluator,
    bootstrap_ci,
    chance_macro_f1,
    confusion_matrix,
    evaluate,
    f1_scores,
    format_table,
    metric_from_counts,
    write_report,
)
from utils.errors import ParameterError
from utils.sampling import class_weights, session_split, spawn_generators, weighted_sampler


def f1_oracle(pred, true, k):
    tp = sum(1 for p, t in zip(pred, true) if p == k and t == k)
    fp = sum(1 for p, t in zip(pred, true) if p == k and t != k)
    fn = sum(1 for p, t in zip(pred, true) if p != k and t == k)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


class TestF1Scores:
    """Tests for f1_scores."""

    def test_against_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(1, 40))
            pred, true = rng.integers(0, 3, n).tolist(), rng.integers(0, 3, n).tolist()

            scores = f1_scores(pred, true)

            expected = [f1_oracle(pred, true, k) for k in range(3)]
            assert [scores.per_class[name] for name in ("CT", "ST", "FN")] == pytest.approx(expected)
            assert scores.macro == pytest.approx(np.mean(expected))
            assert scores.micro == pytest.approx(np.mean(np.array(pred) == np.array(true)))

    def test_perfect_predictions(self):
        scores = f1_scores(["CT", "ST", "FN"], ["CT", "ST", "FN"])

        assert scores.macro == 1.0
        assert scores.micro == 1.0
        assert scores.degenerate_classes == 0

    def test_absent_class_scores_zero(self):
        scores = f1_scores([0, 0, 1], [0, 0, 1])

        assert scores.per_class["FN"] == 0.0
        assert scores.macro == pytest.approx(2.0 / 3.0)
        assert scores.degenerate_classes == 1

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            f1_scores([0, 1], [0])

    def test_empty(self):
        with pytest.raises(ParameterError):
            f1_scores([], [])

    def test_counts_agree(self):
        rng = np.random.default_rng(3)
        pred, true = rng.integers(0, 3, 50), rng.integers(0, 3, 50)
        counts = confusion_matrix(pred, true, normalize=None)
        scores = f1_scores(pred, true)

        assert metric_from_counts(counts, "macro") == pytest.approx(scores.macro)
        assert metric_from_counts(counts, "micro") == pytest.approx(scores.micro)
        assert metric_from_counts(counts, "ST") == pytest.approx(scores.per_class["ST"])


class TestConfusion:
    """Tests for confusion matrices."""

    def test_row_normalized(self):
        matrix = confusion_matrix([0, 1, 1, 0], [0, 0, 1, 1])

        assert matrix.tolist() == [[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]]

    def test_counts(self):
        counts = confusion_matrix([2, 2, 0], [2, 1, 0], normalize=None)

        assert counts.tolist() == [[1, 0, 0], [0, 0, 1], [0, 0, 1]]

    def test_unknown_normalization(self):
        with pytest.raises(ParameterError):
            confusion_matrix([0], [0], normalize="column")


class TestBootstrap:
    """Tests for bootstrap intervals and chance level."""

    def test_deterministic_given_seed(self):
        pred, true = [0, 1, 2, 1, 0, 2, 2, 1], [0, 1, 1, 1, 0, 2, 0, 1]

        first = bootstrap_ci(pred, true, "macro", 200, np.random.default_rng(4))
        second = bootstrap_ci(pred, true, "macro", 200, np.random.default_rng(4))

        assert first == second
        assert first[0] <= first[1]

    def test_perfect_predictions_collapse(self):
        labels = [0, 1, 2] * 5

        assert bootstrap_ci(labels, labels, "micro", 100, np.random.default_rng(0)) == (1.0, 1.0)

    def test_callable_metric(self):
        lo, hi = bootstrap_ci([0, 1, 0, 1], [0, 1, 1, 1], lambda p, t: float(np.mean(p == t)),
                              50, np.random.default_rng(1))

        assert 0.0 <= lo <= hi <= 1.0

    def test_invalid_requests(self):
        with pytest.raises(ParameterError):
            bootstrap_ci([0], [0])
        with pytest.raises(ParameterError):
            bootstrap_ci([0, 1], [0, 1], "accuracy")
        with pytest.raises(ParameterError):
            bootstrap_ci([0, 1], [0, 1], n_resamples=0)

    def test_chance_level(self):
        assert chance_macro_f1([1, 1, 1]) == pytest.approx(1.0 / 3.0)
        p = {"CT": 0.1, "ST": 0.1, "FN": 0.8}
        expected = np.mean([2 * q / 3 / (q + 1 / 3) for q in (0.1, 0.1, 0.8)])
        assert chance_macro_f1(p) == pytest.approx(expected)


class TestEvaluate:
    """Tests for the full report."""

    def test_intervals_contain_point(self):
        rng = np.random.default_rng(2)
        pred, true = rng.integers(0, 3, 30), rng.integers(0, 3, 30)

        report = evaluate(pred, true, n_resamples=100, rng=np.random.default_rng(0))

        for metric in ("CT", "ST", "FN", "micro", "macro"):
            lo, hi = report.ci[metric]
            assert lo <= report.point(metric) <= hi
        assert report.n_samples == 30
        assert np.sum(report.confusion_counts) == 30

    def test_single_sample(self):
        report = evaluate([1], [1], n_resamples=10, rng=np.random.default_rng(0))

        assert report.ci["micro"] == (1.0, 1.0)

    def test_write_report(self, tmp_path):
        report = evaluate([0, 1, 2, 2], [0, 1, 2, 1], n_resamples=20, rng=np.random.default_rng(0))

        path = write_report(report, tmp_path)

        assert json.loads(path.read_text(encoding="utf-8"))["n_samples"] == 4
        assert (tmp_path / "confusion.csv").exists()
        assert "macro" in (tmp_path / "eval.txt").read_text(encoding="utf-8")
        assert format_table(report).splitlines()[0].startswith("metric")

    def test_evaluator_scores_accepted_samples(self):
        rng = np.random.default_rng(0)
        config = ModelConfig.for_inputs("unimodal", ["audio"], {"audio": 3})
        model = UnimodalClassifier(config, rng)
        samples = [
            MultimodalSample(f"s000-{i:04d}", "s000", i % 3,
                             {"text": np.ones(2), **({"audio": rng.normal(size=3)} if i < 5 else {})})
            for i in range(8)
        ]

        report = Evaluator(EvaluationConfig(bootstrap_samples=10, batch_size=2)).evaluate_model(
            model, samples, np.random.default_rng(1)
        )

        assert report.n_samples == 5


class TestSampling:
    """Tests for generators, the balanced sampler and the session split."""

    def test_spawned_generators_are_stable(self):
        first = [g.random() for g in spawn_generators(7, 3)]
        second = [g.random() for g in spawn_generators(7, 3)]

        assert first == second
        assert len(set(first)) == 3

    def test_class_weights(self):
        assert class_weights([0, 0, 1]).tolist() == [0.5, 0.5, 1.0]

    def test_balanced_frequencies(self):
        labels = [0] * 90 + [1] * 9 + [2]

        draws = weighted_sampler(labels, np.random.default_rng(0), num_samples=30000)

        frequencies = np.bincount(np.asarray(labels)[draws], minlength=3) / draws.size
        assert frequencies == pytest.approx([1 / 3, 1 / 3, 1 / 3], abs=0.02)

    def test_balanced_draws_pass_goodness_of_fit(self):
        labels = [0] * 50 + [1] * 30 + [2] * 5

        draws = weighted_sampler(labels, np.random.default_rng(2), num_samples=3000)

        counts = np.bincount(np.asarray(labels)[draws], minlength=3)
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_sessions_are_split_independently_of_labels(self):
        rng = np.random.default_rng(3)
        sessions = [f"s{i:03d}" for i in range(40)]
        labels = {s: int(rng.integers(0, 3)) for s in sessions}

        _, val = session_split(sessions, np.random.default_rng(4))

        table = np.zeros((2, 3))
        for s in sessions:
            table[int(s in val), labels[s]] += 1
        assert stats.chi2_contingency(table).pvalue > 1e-3

    def test_absent_class_never_drawn(self):
        labels = [0, 0, 2, 2, 2]

        draws = weighted_sampler(labels, np.random.default_rng(1), num_samples=500)

        assert 1 not in np.asarray(labels)[draws]
        assert len(weighted_sampler(labels, np.random.default_rng(1))) == 5

    def test_empty_labels(self):
        with pytest.raises(ParameterError):
            weighted_sampler([], np.random.default_rng(0))

    @pytest.mark.parametrize("n_sessions,n_val", [(2, 1), (5, 1), (10, 2), (13, 3)])
    def test_session_split_sizes(self, n_sessions, n_val):
        sessions = [f"s{i:03d}" for i in range(n_sessions)]

        train, val = session_split(sessions * 2, np.random.default_rng(0))

        assert len(val) == n_val
        assert sorted(train + val) == sessions
        assert not set(train) & set(val)

    def test_session_split_is_deterministic(self):
        sessions = [f"s{i:03d}" for i in range(10)]

        assert session_split(sessions, np.random.default_rng(5)) == session_split(sessions, np.random.default_rng(5))

    def test_single_session(self):
        with pytest.raises(ParameterError):
            session_split(["s000", "s000"], np.random.default_rng(0))
