import logging
from typing import Tuple

import numpy as np

from ..config.structures import HestonSpec, TimeGrid
from .market_base import BlockResult, empty_paths

log = logging.getLogger(__name__)


def heston_step(
    s: np.ndarray,
    v: np.ndarray,
    z1: np.ndarray,
    z2: np.ndarray,
    dt: float,
    spec: HestonSpec,
) -> Tuple[np.ndarray, np.ndarray]:

    """Шаг схемы full truncation Эйлера для модели Хестона.

    Корреляция накладывается внутри: w = rho * z1 + sqrt(1 - rho^2) * z2.
    Отрицательная дисперсия усекается схемой, а не считается ошибкой.

    Args:
        s: текущие цены.
        v: текущая дисперсия (состояние схемы, может быть < 0).
        z1: нормальные величины цены.
        z2: независимые нормальные величины дисперсии.
        dt: шаг по времени.
        spec: параметры модели.

    Returns:
        Tuple[np.ndarray, np.ndarray]: цены и дисперсия на следующей дате.
    """

    v_plus = np.maximum(v, 0.0)
    w = spec.rho * z1 + np.sqrt(1.0 - spec.rho**2) * z2
    root = np.sqrt(v_plus * dt)
    v_next = v + spec.kappa * (spec.eta - v_plus) * dt + spec.theta * root * w
    s_next = s * np.exp(-0.5 * v_plus * dt + root * z1)
    return s_next, v_next


def simulate_block(
    model: HestonSpec,
    grid: TimeGrid,
    n_paths: int,
    s0: float,
    rng: np.random.Generator,
) -> BlockResult:

    """Функция моделирования блока траекторий Хестона.

    Args:
        model: параметры модели.
        grid: сетка дат.
        n_paths: размер блока.
        s0: начальная цена.
        rng: генератор подпотока блока.

    Returns:
        BlockResult: матрицы цены и усечённой дисперсии.
    """

    z1 = rng.standard_normal((grid.n_steps, n_paths))
    z2 = rng.standard_normal((grid.n_steps, n_paths))
    spot = empty_paths(n_paths, grid.n_steps, s0)
    variance = empty_paths(n_paths, grid.n_steps, model.initial_variance)
    state = variance[:, 0].copy()
    for k in range(grid.n_steps):
        spot[:, k + 1], state = heston_step(
            spot[:, k],
            state,
            z1[k],
            z2[k],
            grid.dt,
            model,
        )
        variance[:, k + 1] = np.maximum(state, 0.0)
    return spot, variance
