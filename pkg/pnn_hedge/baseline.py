import logging
from typing import Union

import numpy as np
from scipy.stats import norm

from .claims import hedge_result
from .config.structures import Claim, GbmSpec, HedgeResult, PathSet
from .exceptions import DomainError, EmptyData

log = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def _d1(s: ArrayLike, strike: float, sigma: float, tau: ArrayLike) -> np.ndarray:
    total_vol = sigma * np.sqrt(tau)
    return (np.log(np.asarray(s) / strike) + 0.5 * total_vol**2) / total_vol


def _check_inputs(s: ArrayLike, strike: float, sigma: float) -> None:
    if not sigma > 0:
        raise DomainError(f"Волатильность должна быть > 0: {sigma}")
    if not strike > 0 or np.any(np.asarray(s) <= 0):
        raise DomainError("Цена и страйк должны быть > 0.")


def bs_price(s: ArrayLike, strike: float, sigma: float, tau: ArrayLike) -> np.ndarray:

    """Цена колл-опциона Блэка-Шоулза при r = 0.

    s * N(d1) - K * N(d2), при tau = 0 возвращает (s - K)^+.

    Args:
        s: цена базового актива.
        strike: страйк.
        sigma: волатильность.
        tau: оставшийся срок.

    Returns:
        np.ndarray: цена опциона.

    Raises:
        DomainError: при неположительных s, K, sigma или отрицательном tau.
    """

    _check_inputs(s, strike, sigma)
    s, tau = np.broadcast_arrays(
        np.asarray(s, dtype=np.float64),
        np.asarray(tau, dtype=np.float64),
    )
    if np.any(tau < 0):
        raise DomainError("Оставшийся срок должен быть >= 0.")
    intrinsic = np.maximum(s - strike, 0.0)
    live = tau > 0
    safe_tau = np.where(live, tau, 1.0)
    d1 = _d1(s, strike, sigma, safe_tau)
    d2 = d1 - sigma * np.sqrt(safe_tau)
    price = s * norm.cdf(d1) - strike * norm.cdf(d2)
    return np.where(live, price, intrinsic)


def bs_delta(s: ArrayLike, strike: float, sigma: float, tau: ArrayLike) -> np.ndarray:

    """Дельта колл-опциона N(d1).

    Raises:
        DomainError: при tau <= 0 или неположительных s, K, sigma.
    """

    _check_inputs(s, strike, sigma)
    if np.any(np.asarray(tau) <= 0):
        raise DomainError("Для дельты оставшийся срок должен быть > 0.")
    return norm.cdf(_d1(s, strike, sigma, tau))


def bs_hedge_pnl(
    paths: PathSet,
    claim: Claim,
    sigma_hedge: float,
    vol_shift: float = 0.0,
) -> HedgeResult:

    """Функция дельта-хеджирования по Блэку-Шоулзу.

    На каждой дате t_k позиция delta_k = -sign * N(d1) с волатильностью
    sigma_hedge + vol_shift; для короткого колла это +N(d1).

    Args:
        paths: траектории задачи.
        claim: обязательство.
        sigma_hedge: волатильность хеджа.
        vol_shift: сдвиг волатильности. По умолчанию 0.

    Returns:
        HedgeResult: дельты и PnL без премии (премия по цене BS).

    Raises:
        DomainError: если сдвинутая волатильность <= 0.
    """

    sigma = sigma_hedge + vol_shift
    if not sigma > 0:
        raise DomainError(f"Сдвинутая волатильность должна быть > 0: {sigma}")
    log.debug(f"BS-хедж задачи {paths.task_id} с волатильностью {sigma}")
    tau = paths.grid.time_to_maturity
    call_delta = bs_delta(paths.spot[:, :-1], claim.strike, sigma, tau)
    deltas = -claim.position.sign * call_delta
    premium = float(bs_price(paths.s0, claim.strike, sigma, paths.grid.maturity))
    return hedge_result(claim, paths, deltas, premium)


def realized_vol(paths: PathSet) -> float:

    """Реализованная волатильность траекторий задачи.

    Стандартное отклонение логдоходностей, объединённых по всем
    траекториям и шагам, с вычетом среднего, в пересчёте на год (1 / dt).

    Raises:
        EmptyData: если доходность всего одна.
    """

    returns = np.diff(np.log(paths.spot), axis=1).ravel()
    if returns.size < 2:
        raise EmptyData("Для реализованной волатильности нужно >= 2 доходностей.")
    return float(np.sqrt(np.var(returns) / paths.grid.dt))


def hedge_vol(paths: PathSet) -> float:

    """Волатильность BS-хеджа задачи: sigma модели для GBM, иначе реализованная."""

    if isinstance(paths.model, GbmSpec) and paths.model.sigma > 0:
        return paths.model.sigma
    return realized_vol(paths)
