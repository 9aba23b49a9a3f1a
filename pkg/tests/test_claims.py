import numpy as np

from pnn_hedge.claims import gains, hedge_result, mc_premium, payoff, terminal_pnl
from pnn_hedge.config.structures import Claim, GbmSpec, PathSet, Position, TimeGrid
from pnn_hedge.exceptions import DimensionMismatch, IncompatibleData

import pytest


SHORT_CALL = Claim(1.0)
LONG_CALL = Claim(1.0, Position.LONG)

payoffs = (
    ('claim', 'terminal', 'expected'),
    (
        (SHORT_CALL, 1.2, -0.2),
        (SHORT_CALL, 0.8, 0.0),
        (LONG_CALL, 1.2, 0.2),
        (LONG_CALL, 1.0, 0.0),
    ),
)


def two_paths() -> PathSet:
    spot = np.array([[1.0, 1.05, 1.1], [1.0, 0.95, 0.9]])
    return PathSet(0, spot, None, 0, TimeGrid(2, 1.0), GbmSpec(0.0, 0.1))


@pytest.mark.parametrize(*payoffs)
def test_payoff(claim, terminal, expected):
    assert payoff(claim, terminal) == pytest.approx(expected)


def test_gains_sum_of_position_times_increment():
    deltas = np.array([[1.0, 2.0]])
    spots = np.array([[1.0, 1.5, 1.25]])
    assert gains(deltas, spots) == pytest.approx([1.0 * 0.5 + 2.0 * -0.25])


def test_gains_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        gains(np.zeros((2, 3)), np.ones((2, 3)))


def test_terminal_pnl_premium_is_optional():
    paths = two_paths()
    deltas = np.full((2, 2), 0.5)
    pnl = terminal_pnl(SHORT_CALL, deltas, paths.spot)
    assert pnl == pytest.approx([-0.1 + 0.05, -0.05])
    with_premium = terminal_pnl(SHORT_CALL, deltas, paths.spot, True, 0.05)
    assert with_premium == pytest.approx(pnl + 0.05)


def test_zero_hedge_pnl_is_payoff():
    paths = two_paths()
    pnl = terminal_pnl(SHORT_CALL, np.zeros((2, 2)), paths.spot)
    assert pnl == pytest.approx(payoff(SHORT_CALL, paths.terminal))


def test_mc_premium_and_hedge_result():
    paths = two_paths()
    assert mc_premium(SHORT_CALL, paths) == pytest.approx(0.05)
    result = hedge_result(SHORT_CALL, paths, np.zeros((2, 2)))
    assert result.premium == pytest.approx(0.05)
    assert result.task_id == 0
    assert result.pnl.shape == (2,)


def test_hedge_result_rejects_non_finite_deltas():
    paths = two_paths()
    deltas = np.array([[0.0, np.nan], [0.0, 0.0]])
    with pytest.raises(IncompatibleData):
        hedge_result(SHORT_CALL, paths, deltas, premium=0.0)


if __name__ == '__main__':
    pytest.main()
