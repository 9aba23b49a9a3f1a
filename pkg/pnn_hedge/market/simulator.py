import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Mapping

import numpy as np

from ..config.structures import ModelKind, ModelSpec, PathSet, TimeGrid
from ..exceptions import InvalidConfig, InvalidModelSpec, NumericalFailure
from . import bns, gbm, heston, heston_jump
from .market_base import PATH_BLOCK, BlockResult, block_generator

log = logging.getLogger(__name__)

BLOCK_KERNELS: Mapping[ModelKind, Callable[..., BlockResult]] = {
    ModelKind.GBM: gbm.simulate_block,
    ModelKind.HESTON: heston.simulate_block,
    ModelKind.HESTON_JUMP: heston_jump.simulate_block,
    ModelKind.BNS: bns.simulate_block,
}


def simulate(
    model: ModelSpec,
    grid: TimeGrid,
    n_paths: int,
    s0: float,
    seed: int,
    *,
    task_id: int = 0,
    threads: int = 1,
) -> PathSet:

    """Функция моделирования траекторий, входной интерфейс подмодуля.

    Траектории считаются блоками по PATH_BLOCK штук, каждый блок имеет
    собственный подпоток (seed, номер блока). Результат побитово
    детерминирован и не зависит от threads.

    Args:
        model: параметры модели рынка.
        grid: сетка торговых дат.
        n_paths: число траекторий.
        s0: начальная цена.
        seed: зерно задачи.
        task_id: идентификатор задачи. По умолчанию 0.
        threads: число потоков. По умолчанию 1.

    Returns:
        PathSet: смоделированные траектории.

    Raises:
        InvalidConfig: при неверных n_paths, s0 или threads.
        InvalidModelSpec: при незарегистрированной модели.
        NumericalFailure: если цены потеряли положительность.
    """

    log.debug(
        f"Запущено моделирование {n_paths} траекторий модели {model} "
        f"на сетке {grid}, seed {seed}",
    )
    if n_paths < 1:
        raise InvalidConfig(f"Число траекторий должно быть >= 1: {n_paths}")
    if not s0 > 0:
        raise InvalidConfig(f"Начальная цена должна быть > 0: {s0}")
    if threads < 1:
        raise InvalidConfig(f"Число потоков должно быть >= 1: {threads}")
    try:
        kernel = BLOCK_KERNELS[model.kind]
    except (KeyError, AttributeError) as exc:
        raise InvalidModelSpec(f"Незарегистрированная модель: {model}") from exc

    n_blocks = -(-n_paths // PATH_BLOCK)

    def run_block(block: int) -> BlockResult:
        rng = block_generator(seed, block)
        return kernel(model, grid, PATH_BLOCK, s0, rng)

    if threads == 1:
        blocks = [run_block(block) for block in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            blocks = list(executor.map(run_block, range(n_blocks)))

    spot = np.concatenate([block[0] for block in blocks])[:n_paths]
    variances = [block[1] for block in blocks if block[1] is not None]
    variance = np.concatenate(variances)[:n_paths] if variances else None

    if not np.all(spot > 0):
        log.error("Смоделированы неположительные цены.")
        raise NumericalFailure("Смоделированные цены должны быть положительны.")

    log.debug(f"Моделирование завершено: {n_blocks} блоков.")
    return PathSet(task_id, spot, variance, seed, grid, model)
