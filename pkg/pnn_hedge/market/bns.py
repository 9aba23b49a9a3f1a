import logging
from typing import Tuple

import numpy as np

from ..config.structures import BnsSpec, TimeGrid
from ..exceptions import DomainError
from .market_base import BlockResult, JumpBatch, collect_jumps, empty_paths

log = logging.getLogger(__name__)


def bns_cumulant(u: float, a: float, b: float) -> float:

    """Кумулянтная функция субординатора k(u) = -a * u / (b + u).

    Args:
        u: аргумент.
        a: интенсивность скачков.
        b: обратный средний размер скачка.

    Returns:
        float: значение k(u).

    Raises:
        DomainError: если b + u <= 0.
    """

    if b + u <= 0:
        raise DomainError(f"Кумулянта не определена: b + u = {b + u} <= 0")
    return -a * u / (b + u)


def bns_step(
    log_s: np.ndarray,
    v: np.ndarray,
    z: np.ndarray,
    dt: float,
    jumps: JumpBatch,
    spec: BnsSpec,
) -> Tuple[np.ndarray, np.ndarray]:

    """Шаг модели BNS с точной рекурсией процесса OU.

    Дисперсия: v' = exp(-lambda * dt) * v + sum_i exp(-lambda * (dt - tau_i)) * x_i.
    Логарифм цены сдвигается на (-lambda * k(-rho) - v / 2) * dt
    + sqrt(v * dt) * z + rho * sum_i x_i, где v берётся на левом конце интервала.

    Args:
        log_s: логарифмы текущих цен.
        v: текущая дисперсия.
        z: нормальные величины диффузии.
        dt: шаг по времени.
        jumps: скачки субординатора внутри интервала.
        spec: параметры модели.

    Returns:
        Tuple[np.ndarray, np.ndarray]: логарифмы цен и дисперсия на следующей дате.
    """

    n_paths = np.shape(v)[0]
    lam = spec.lambda_bns
    weights = np.exp(-lam * (dt - jumps.offset)) * jumps.size
    jump_variance = np.bincount(jumps.path, weights=weights, minlength=n_paths)
    jump_total = np.bincount(jumps.path, weights=jumps.size, minlength=n_paths)

    v_next = np.exp(-lam * dt) * v + jump_variance
    compensator = -lam * bns_cumulant(-spec.rho_bns, spec.a, spec.b)
    log_next = (
        log_s
        + (compensator - 0.5 * v) * dt
        + np.sqrt(v * dt) * z
        + spec.rho_bns * jump_total
    )
    return log_next, v_next


def simulate_block(
    model: BnsSpec,
    grid: TimeGrid,
    n_paths: int,
    s0: float,
    rng: np.random.Generator,
) -> BlockResult:

    """Функция моделирования блока траекторий BNS.

    Скачки субординатора z_{lambda t} приходят с интенсивностью a * lambda,
    размеры экспоненциальны со средним 1 / b.

    Args:
        model: параметры модели.
        grid: сетка дат.
        n_paths: размер блока.
        s0: начальная цена.
        rng: генератор подпотока блока.

    Returns:
        BlockResult: матрицы цены и дисперсии.
    """

    shape = (grid.n_steps, n_paths)
    z = rng.standard_normal(shape)
    counts = rng.poisson(model.a * model.lambda_bns * grid.dt, shape)

    spot = empty_paths(n_paths, grid.n_steps, s0)
    variance = empty_paths(n_paths, grid.n_steps, model.sigma0_sq)
    log_s = np.full(n_paths, np.log(s0))
    for k in range(grid.n_steps):
        jumps = collect_jumps(counts[k], grid.dt, 1.0 / model.b, rng)
        log_s, variance[:, k + 1] = bns_step(
            log_s,
            variance[:, k],
            z[k],
            grid.dt,
            jumps,
            model,
        )
        spot[:, k + 1] = np.exp(log_s)
    return spot, variance
