import logging
from typing import Optional, Union

import numpy as np

from .config.structures import Claim, HedgeResult, PathSet
from .exceptions import DimensionMismatch

log = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def payoff(claim: Claim, terminal_spot: ArrayLike) -> np.ndarray:

    """Платёж по обязательству Z = sign * (S_T - K)^+.

    Для короткой позиции Z = -(S_T - K)^+.

    Args:
        claim: обязательство.
        terminal_spot: цены на дату экспирации.

    Returns:
        np.ndarray: платежи.
    """

    spot = np.asarray(terminal_spot, dtype=np.float64)
    intrinsic = np.maximum(spot - claim.strike, 0.0)
    return claim.position.sign * intrinsic


def gains(deltas: np.ndarray, spots: np.ndarray) -> np.ndarray:

    """Доход от торговли (delta . S)_T = sum_k delta_k * (S_{k+1} - S_k).

    Args:
        deltas: позиции [..., n_steps].
        spots: цены [..., n_steps + 1].

    Returns:
        np.ndarray: доход по каждой траектории.

    Raises:
        DimensionMismatch: при несогласованных размерностях.
    """

    deltas = np.asarray(deltas, dtype=np.float64)
    spots = np.asarray(spots, dtype=np.float64)
    if deltas.shape[-1] + 1 != spots.shape[-1] or deltas.shape[:-1] != spots.shape[:-1]:
        raise DimensionMismatch(
            f"Размерности дельт {deltas.shape} и цен {spots.shape} не согласованы.",
        )
    return np.sum(deltas * np.diff(spots, axis=-1), axis=-1)


def terminal_pnl(
    claim: Claim,
    deltas: np.ndarray,
    spots: np.ndarray,
    include_premium: bool = False,
    p0: float = 0.0,
) -> np.ndarray:

    """Итоговый PnL_T = Z + (delta . S)_T, плюс p0 если include_premium.

    Args:
        claim: обязательство.
        deltas: позиции [..., n_steps].
        spots: цены [..., n_steps + 1].
        include_premium: прибавлять ли премию. По умолчанию False.
        p0: премия.

    Returns:
        np.ndarray: PnL по каждой траектории.
    """

    spots = np.asarray(spots, dtype=np.float64)
    pnl = payoff(claim, spots[..., -1]) + gains(deltas, spots)
    if include_premium:
        pnl = pnl + p0
    return pnl


def mc_premium(claim: Claim, paths: PathSet) -> float:

    """Премия p0 как среднее недисконтированной выплаты опциона (r = 0)."""

    return float(np.mean(np.maximum(paths.terminal - claim.strike, 0.0)))


def hedge_result(
    claim: Claim,
    paths: PathSet,
    deltas: np.ndarray,
    premium: Optional[float] = None,
) -> HedgeResult:

    """Функция сборки результата хеджирования задачи.

    Args:
        claim: обязательство.
        paths: траектории задачи.
        deltas: позиции [n_paths x n_steps].
        premium: премия, по умолчанию считается по траекториям.

    Returns:
        HedgeResult: дельты и PnL без премии.
    """

    if premium is None:
        premium = mc_premium(claim, paths)
    pnl = terminal_pnl(claim, deltas, paths.spot)
    log.debug(f"Задача {paths.task_id}: средний PnL {pnl.mean()}, премия {premium}")
    return HedgeResult(np.asarray(deltas), pnl, premium, paths.task_id)
