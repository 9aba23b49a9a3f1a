import numpy as np

from pnn_hedge.exceptions import DimensionMismatch, DomainError
from pnn_hedge.training.optimizer import adam_step, init_state, lr_schedule

import pytest


bad_schedules = (
    ('step', 'total'),
    (
        (0, 0),
        (0, -3),
        (-1, 10),
        (11, 10),
    ),
)


def test_first_adam_step_moves_by_learning_rate():
    params = [np.array([1.0, -2.0, 0.5])]
    grads = [np.array([3.0, -0.01, 100.0])]
    updated, state = adam_step(params, grads, init_state(params), 0.1)
    assert updated[0] == pytest.approx(params[0] - 0.1 * np.sign(grads[0]), rel=1e-6)
    assert state.step == 1
    assert params[0] == pytest.approx([1.0, -2.0, 0.5])


def test_zero_gradient_keeps_params():
    params = [np.ones((2, 2))]
    updated, _ = adam_step(params, [np.zeros((2, 2))], init_state(params), 0.1)
    assert np.array_equal(updated[0], params[0])


def test_adam_minimizes_quadratic():
    params = [np.array([5.0, -3.0])]
    state = init_state(params)
    for step in range(2000):
        lr = lr_schedule(step, 1999, 0.1, 0.001)
        params, state = adam_step(params, [2.0 * params[0]], state, lr)
    assert np.abs(params[0]).max() < 1e-2


def test_adam_rejects_incongruent_tensors():
    params = [np.zeros(3)]
    with pytest.raises(DimensionMismatch):
        adam_step(params, [np.zeros(4)], init_state(params), 0.1)


def test_lr_schedule_endpoints_are_exact():
    assert lr_schedule(0, 1000, 5e-4, 1e-4) == 5e-4
    assert lr_schedule(1000, 1000, 5e-4, 1e-4) == 1e-4


def test_lr_schedule_is_geometric():
    middle = lr_schedule(500, 1000, 5e-4, 1e-4)
    assert middle == pytest.approx(np.sqrt(5e-4 * 1e-4))
    rates = [lr_schedule(step, 100, 1e-2, 1e-4) for step in range(101)]
    assert all(a > b for a, b in zip(rates[:-1], rates[1:]))


@pytest.mark.parametrize(*bad_schedules)
def test_lr_schedule_domain(step, total):
    with pytest.raises(DomainError):
        lr_schedule(step, total, 1e-3, 1e-4)


if __name__ == '__main__':
    pytest.main()
