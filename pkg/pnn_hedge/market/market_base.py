import logging
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

log = logging.getLogger(__name__)

PATH_BLOCK = 1024

BlockResult = Tuple[np.ndarray, Optional[np.ndarray]]


class JumpBatch(NamedTuple):

    """Класс данных скачков внутри одного интервала сетки.

    Attributes:
        path: индекс траектории каждого скачка.
        offset: момент скачка относительно начала интервала, (0, dt].
        size: размер скачка.
    """

    path: np.ndarray
    offset: np.ndarray
    size: np.ndarray


def block_generator(seed: int, block: int) -> np.random.Generator:

    """Функция создания независимого подпотока для блока траекторий.

    Подпоток определяется только парой (seed, block), поэтому результат
    не зависит от порядка и степени параллельного выполнения.

    Args:
        seed: зерно задачи.
        block: номер блока траекторий.

    Returns:
        np.random.Generator: генератор подпотока.
    """

    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
    return np.random.default_rng(sequence)


def task_seeds(seed: int, n_tasks: int) -> List[int]:

    """Функция получения 64-битных зёрен задач из глобального зерна.

    Args:
        seed: глобальное зерно эксперимента.
        n_tasks: число задач.

    Returns:
        List[int]: зерно для каждой задачи.
    """

    children = np.random.SeedSequence(seed).spawn(n_tasks)
    seeds = [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]
    log.debug(f"Зёрна задач: {seeds}")
    return seeds


def empty_paths(n_paths: int, n_steps: int, start: float) -> np.ndarray:

    """Матрица траекторий с заполненным начальным столбцом."""

    paths = np.empty((n_paths, n_steps + 1), dtype=np.float64)
    paths[:, 0] = start
    return paths


def collect_jumps(
    counts: np.ndarray,
    dt: float,
    mean_size: float,
    rng: np.random.Generator,
) -> JumpBatch:

    """Функция розыгрыша моментов и экспоненциальных размеров скачков.

    Args:
        counts: число скачков на каждой траектории в интервале.
        dt: длина интервала.
        mean_size: средний размер скачка.
        rng: генератор подпотока.

    Returns:
        JumpBatch: скачки интервала.
    """

    total = int(counts.sum())
    path = np.repeat(np.arange(counts.shape[0]), counts)
    # момент скачка равномерен на (0, dt]
    offset = dt - rng.uniform(0.0, dt, total)
    size = rng.exponential(mean_size, total)
    return JumpBatch(path, offset, size)
