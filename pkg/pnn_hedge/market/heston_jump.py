import logging
from typing import Tuple

import numpy as np

from ..config.structures import HestonJumpSpec, TimeGrid
from .heston import heston_step
from .market_base import BlockResult, empty_paths

log = logging.getLogger(__name__)


def heston_jump_step(
    s: np.ndarray,
    v: np.ndarray,
    z1: np.ndarray,
    z2: np.ndarray,
    n_jumps: np.ndarray,
    jump_normals: np.ndarray,
    dt: float,
    spec: HestonJumpSpec,
) -> Tuple[np.ndarray, np.ndarray]:

    """Шаг модели Хестона со скачками.

    Диффузионная часть совпадает с heston_step, к ней добавляются
    компенсатор exp(-lambda_j * mu_j * dt) и произведение множителей (1 + J),
    где log(1 + J) ~ N(log(1 + mu_j) - sigma_j^2 / 2, sigma_j^2).

    Args:
        s: текущие цены.
        v: текущая дисперсия.
        z1, z2: нормальные величины диффузии.
        n_jumps: число скачков в интервале (Пуассон с параметром lambda_j * dt).
        jump_normals: уже просуммированные нормальные величины скачков
            интервала. Достаточно передать sqrt(n_jumps) * N(0, 1): это
            распределение совпадает с суммой n_jumps независимых N(0, 1),
            разыгранных по одной на скачок.
        dt: шаг по времени.
        spec: параметры модели.

    Returns:
        Tuple[np.ndarray, np.ndarray]: цены и дисперсия на следующей дате.
    """

    s_next, v_next = heston_step(s, v, z1, z2, dt, spec.diffusion)
    log_mean = np.log1p(spec.mu_j) - 0.5 * spec.sigma_j**2
    log_jump = (
        -spec.lambda_j * spec.mu_j * dt
        + n_jumps * log_mean
        + spec.sigma_j * jump_normals
    )
    return s_next * np.exp(log_jump), v_next


def simulate_block(
    model: HestonJumpSpec,
    grid: TimeGrid,
    n_paths: int,
    s0: float,
    rng: np.random.Generator,
) -> BlockResult:

    """Функция моделирования блока траекторий Хестона со скачками.

    Первые две серии нормальных величин совпадают с серией модели
    Хестона того же подпотока.

    Args:
        model: параметры модели.
        grid: сетка дат.
        n_paths: размер блока.
        s0: начальная цена.
        rng: генератор подпотока блока.

    Returns:
        BlockResult: матрицы цены и усечённой дисперсии.
    """

    shape = (grid.n_steps, n_paths)
    z1 = rng.standard_normal(shape)
    z2 = rng.standard_normal(shape)
    counts = rng.poisson(model.lambda_j * grid.dt, shape)
    # сумма n независимых N(0, 1) распределена как sqrt(n) * N(0, 1)
    jump_normals = np.sqrt(counts) * rng.standard_normal(shape)

    spot = empty_paths(n_paths, grid.n_steps, s0)
    variance = empty_paths(n_paths, grid.n_steps, model.initial_variance)
    state = variance[:, 0].copy()
    for k in range(grid.n_steps):
        spot[:, k + 1], state = heston_jump_step(
            spot[:, k],
            state,
            z1[k],
            z2[k],
            counts[k],
            jump_normals[k],
            grid.dt,
            model,
        )
        variance[:, k + 1] = np.maximum(state, 0.0)
    return spot, variance
