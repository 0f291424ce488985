"""
Unit Tests for the Optimizer and Schedules
"""

import numpy as np
import pytest

from core import ops
from core.autograd import Parameter
from core.optim import AdamW, adamw_step, build_schedule, constant, cosine_annealing, one_cycle
from utils.errors import ParameterError


class TestAdamW:
    """Tests for the AdamW update."""

    def test_first_step_is_sign_sized(self):
        p = Parameter(np.array([1.0, -2.0]))
        p.grad = np.array([0.5, -3.0])

        adamw_step([p], lr=0.1, weight_decay=0.0)

        assert np.allclose(p.data, [0.9, -1.9], atol=1e-6)
        assert p.step == 1

    def test_decoupled_weight_decay(self):
        p = Parameter(np.array([2.0]))
        p.grad = np.zeros(1)

        adamw_step([p], lr=0.1, weight_decay=0.5)

        assert p.data[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)

    def test_invalid_learning_rate(self):
        with pytest.raises(ParameterError):
            adamw_step([], lr=0.0)
        with pytest.raises(ParameterError):
            AdamW([], lr=-1.0)

    def test_minimizes_quadratic(self):
        target = np.array([1.0, -2.0, 0.5])
        p = Parameter(np.zeros(3))
        optimizer = AdamW([p], lr=0.05, weight_decay=0.0)

        for _ in range(500):
            optimizer.zero_grad()
            diff = ops.add(p, -target)
            ops.sum(ops.mul(diff, diff)).backward()
            optimizer.step()

        assert np.allclose(p.data, target, atol=1e-2)


class TestSchedules:
    """Tests for learning-rate schedules."""

    def test_cosine_endpoints(self):
        lr = cosine_annealing(0.01, 100)

        assert lr.shape == (101,)
        assert lr[0] == pytest.approx(0.01)
        assert lr[50] == pytest.approx(0.005)
        assert lr[100] == pytest.approx(0.0, abs=1e-15)
        assert np.all(np.diff(lr) <= 0)

    def test_one_cycle_shape(self):
        lr = one_cycle(1e-3, 100)

        assert lr[0] == pytest.approx(1e-3 / 25)
        assert int(np.argmax(lr)) == 30
        assert lr[30] == pytest.approx(1e-3)
        assert lr[100] == pytest.approx(1e-3 / 25 / 1e4)
        assert np.all(np.diff(lr[:31]) > 0)
        assert np.all(np.diff(lr[30:]) <= 0)

    def test_one_cycle_without_warmup(self):
        lr = one_cycle(1e-3, 10, warmup_fraction=0.0)

        assert lr[0] == pytest.approx(1e-3)

    def test_constant(self):
        assert constant(0.1, 3).tolist() == [0.1, 0.1, 0.1, 0.1]

    def test_build_schedule(self):
        assert np.array_equal(build_schedule("cosine", 0.1, 10), cosine_annealing(0.1, 10))

    def test_unknown_schedule(self):
        with pytest.raises(ParameterError):
            build_schedule("linear", 0.1, 10)

    @pytest.mark.parametrize("max_lr,steps", [(0.0, 10), (0.1, 0)])
    def test_invalid_schedule_arguments(self, max_lr, steps):
        with pytest.raises(ParameterError):
            cosine_annealing(max_lr, steps)
