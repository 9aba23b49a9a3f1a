import logging

import numpy as np

from ..config.structures import GbmSpec, TimeGrid
from .market_base import BlockResult, empty_paths

log = logging.getLogger(__name__)


def gbm_step(
    s: np.ndarray,
    z: np.ndarray,
    dt: float,
    mu: float,
    sigma: float,
) -> np.ndarray:

    """Точный лог-эйлеровский шаг геометрического броуновского движения.

    Args:
        s: текущие цены.
        z: стандартные нормальные величины.
        dt: шаг по времени в долях года.
        mu: снос.
        sigma: волатильность.

    Returns:
        np.ndarray: цены на следующей дате.
    """

    return s * np.exp((mu - 0.5 * sigma**2) * dt + sigma * np.sqrt(dt) * z)


def simulate_block(
    model: GbmSpec,
    grid: TimeGrid,
    n_paths: int,
    s0: float,
    rng: np.random.Generator,
) -> BlockResult:

    """Функция моделирования блока траекторий GBM.

    Args:
        model: параметры GBM.
        grid: сетка дат.
        n_paths: размер блока.
        s0: начальная цена.
        rng: генератор подпотока блока.

    Returns:
        BlockResult: матрица цен и None вместо дисперсии.
    """

    z1 = rng.standard_normal((grid.n_steps, n_paths))
    spot = empty_paths(n_paths, grid.n_steps, s0)
    for k in range(grid.n_steps):
        spot[:, k + 1] = gbm_step(spot[:, k], z1[k], grid.dt, model.mu, model.sigma)
    return spot, None
