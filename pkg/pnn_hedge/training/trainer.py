import logging
import math
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..claims import hedge_result, terminal_pnl
from ..config.structures import (
    Claim,
    HedgeResult,
    NetworkArch,
    PathSet,
    TimeGrid,
    TrainConfig,
    TrainLogRow,
    TrainMode,
)
from ..exceptions import EmptyData, IncompatibleData, InvalidConfig, NumericalFailure
from ..neural.network import (
    Gradients,
    NetworkParams,
    backward_batch,
    check_arch,
    grow_embedding,
    init_params,
    network_deltas,
    path_features,
)
from .optimizer import adam_step, init_state, lr_schedule

log = logging.getLogger(__name__)

EVAL_CHUNK = 1024

TrainResult = Tuple[NetworkParams, List[TrainLogRow]]


def _loss_and_grads(
    params: NetworkParams,
    claim: Claim,
    task_ids: np.ndarray,
    spots: np.ndarray,
    grid: TimeGrid,
    with_grads: bool = True,
) -> Tuple[float, Optional[Gradients]]:
    if spots.shape[0] == 0:
        raise EmptyData("Батч для функции потерь пуст.")
    features = path_features(spots, claim.strike, grid)
    deltas, cache = network_deltas(params, task_ids, features)
    pnl = terminal_pnl(claim, deltas, spots)
    loss = float(np.mean(pnl * pnl))
    if not with_grads:
        return loss, None
    # dL/d(delta_bk) = 2 * pnl_b * (S_{k+1} - S_k) / B
    upstream = (2.0 / spots.shape[0]) * pnl[:, None] * np.diff(spots, axis=1)
    return loss, backward_batch(params, cache, upstream.reshape(-1))


def hedging_loss(
    params: NetworkParams,
    claim: Claim,
    task_ids: np.ndarray,
    spots: np.ndarray,
    grid: TimeGrid,
) -> float:

    """Квадратичная потеря хеджа mean_b (Z_b + (delta . S)_b)^2, премия не входит.

    Args:
        params: параметры сети.
        claim: обязательство.
        task_ids: задача каждой траектории батча [B].
        spots: траектории батча [B x (n_steps + 1)].
        grid: сетка дат.

    Returns:
        float: значение потери.

    Raises:
        EmptyData: если батч пуст.
    """

    loss, _ = _loss_and_grads(params, claim, task_ids, spots, grid, with_grads=False)
    return loss


def _chunked_loss(
    params: NetworkParams,
    claim: Claim,
    task_ids: np.ndarray,
    spots: np.ndarray,
    grid: TimeGrid,
) -> float:
    if spots.shape[0] == 0:
        return math.nan
    total = 0.0
    for start in range(0, spots.shape[0], EVAL_CHUNK):
        chunk = slice(start, start + EVAL_CHUNK)
        loss, _ = _loss_and_grads(
            params,
            claim,
            task_ids[chunk],
            spots[chunk],
            grid,
            with_grads=False,
        )
        total += loss * spots[chunk].shape[0]
    return total / spots.shape[0]


def split_paths(paths: PathSet, train_fraction: float = 0.8) -> Tuple[PathSet, PathSet]:

    """Разбиение траекторий задачи на обучающие и отложенные по индексу.

    Первые floor(n * train_fraction) траекторий идут в обучение.

    Raises:
        InvalidConfig: если доля вне (0, 1].
        EmptyData: если обучающая часть пуста.
    """

    if not 0 < train_fraction <= 1:
        raise InvalidConfig(f"Доля обучающей выборки вне (0, 1]: {train_fraction}")
    n_train = int(paths.n_paths * train_fraction)
    if n_train < 1:
        raise EmptyData(f"Задача {paths.task_id}: обучающая выборка пуста.")
    return paths.select(slice(0, n_train)), paths.select(slice(n_train, None))


def _pool(datasets: Sequence[PathSet]) -> Tuple[np.ndarray, np.ndarray]:
    if not datasets:
        return np.empty(0, dtype=np.int64), np.empty((0, 0))
    task_ids = np.concatenate(
        [np.full(paths.n_paths, paths.task_id, dtype=np.int64) for paths in datasets],
    )
    return task_ids, np.concatenate([paths.spot for paths in datasets])


def _check_datasets(datasets: Sequence[PathSet], n_tasks: int) -> TimeGrid:
    if not datasets or any(paths.n_paths == 0 for paths in datasets):
        raise EmptyData("Нет траекторий для обучения.")
    grid = datasets[0].grid
    if any(paths.grid != grid for paths in datasets):
        raise IncompatibleData("Наборы траекторий построены на разных сетках.")
    if sorted(paths.task_id for paths in datasets) != list(range(n_tasks)):
        raise IncompatibleData(
            f"Идентификаторы задач должны быть плотными 0..{n_tasks - 1}.",
        )
    return grid


def _run_epochs(
    params: NetworkParams,
    task_ids: np.ndarray,
    spots: np.ndarray,
    eval_ids: np.ndarray,
    eval_spots: np.ndarray,
    grid: TimeGrid,
    config: TrainConfig,
    claim: Claim,
    embedding_row: Optional[int] = None,
) -> TrainResult:

    """Общий цикл обучения по эпохам.

    При embedding_row оптимизируется только эта строка таблицы эмбеддингов,
    остальные тензоры не переписываются.
    """

    rng = np.random.default_rng(config.seed)
    n_rows = spots.shape[0]
    steps_per_epoch = -(-n_rows // config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    schedule_span = max(total_steps - 1, 1)

    if embedding_row is None:
        trainable = params.tensors()
    else:
        table = params.embedding.copy()
        params = NetworkParams(table, params.weights, params.biases)
        trainable = [table[embedding_row].copy()]
    state = init_state(trainable)

    history: List[TrainLogRow] = []
    step = 0
    lr = config.lr_initial
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_rows)
        loss_sum = 0.0
        for start in range(0, n_rows, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = _loss_and_grads(
                params,
                claim,
                task_ids[batch],
                spots[batch],
                grid,
            )
            if not math.isfinite(loss) or grads is None:
                log.error(f"Эпоха {epoch}, шаг {step}: потеря {loss}")
                raise NumericalFailure(f"Потеря не конечна на эпохе {epoch}: {loss}")
            lr = lr_schedule(
                min(step, schedule_span),
                schedule_span,
                config.lr_initial,
                config.lr_final,
            )
            if embedding_row is None:
                gradient = grads.tensors()
            else:
                gradient = [grads.embedding[embedding_row]]
            trainable, state = adam_step(
                trainable,
                gradient,
                state,
                lr,
                config.beta1,
                config.beta2,
                config.eps,
            )
            if embedding_row is None:
                params = NetworkParams.from_tensors(trainable)
            else:
                params.embedding[embedding_row] = trainable[0]
            loss_sum += loss * batch.shape[0]
            step += 1

        train_loss = loss_sum / n_rows
        eval_loss = _chunked_loss(params, claim, eval_ids, eval_spots, grid)
        history.append(TrainLogRow(epoch, lr, train_loss, eval_loss))
        log.info(
            f"Эпоха {epoch}/{config.epochs}: lr {lr:.6g}, "
            f"train {train_loss:.6e}, eval {eval_loss:.6e}",
        )
    return params, history


def train(
    datasets: Sequence[PathSet],
    arch: NetworkArch,
    config: TrainConfig,
    claim: Claim,
    eval_datasets: Optional[Sequence[PathSet]] = None,
    initial_params: Optional[NetworkParams] = None,
) -> TrainResult:

    """Функция совместного обучения сети на всех задачах семейства.

    Эпоха - один проход по объединению траекторий всех задач, батчи
    перемешиваются генератором из config.seed и смешивают задачи.
    Число шагов равно epochs * ceil(N / batch_size).

    Args:
        datasets: траектории задач с task_id 0..m-1.
        arch: архитектура сети, arch.n_tasks = m.
        config: гиперпараметры, режим FULL.
        claim: обязательство.
        eval_datasets: отложенные траектории для журнала. По умолчанию None.
        initial_params: параметры для продолжения обучения. По умолчанию None.

    Returns:
        Tuple[NetworkParams, List[TrainLogRow]]: параметры и журнал по эпохам.

    Raises:
        EmptyData: если траекторий нет.
        IncompatibleData: при разных сетках, разреженных task_id или чужих параметрах.
        InvalidConfig: если режим не FULL.
        NumericalFailure: если потеря стала нечисловой.
    """

    log.debug(f"Обучение на {len(datasets)} задачах, arch {arch}, config {config}")
    if config.mode is not TrainMode.FULL:
        raise InvalidConfig("Для обучения только эмбеддинга используйте recalibrate.")
    grid = _check_datasets(datasets, arch.n_tasks)
    eval_datasets = [paths for paths in eval_datasets or () if paths.n_paths]
    if any(paths.grid != grid for paths in eval_datasets):
        raise IncompatibleData("Отложенные траектории построены на другой сетке.")

    if initial_params is None:
        params = init_params(arch, config.seed)
    else:
        check_arch(initial_params, arch)
        params = initial_params
    if config.epochs == 0:
        return params, []

    task_ids, spots = _pool(datasets)
    eval_ids, eval_spots = _pool(eval_datasets)
    params, history = _run_epochs(
        params,
        task_ids,
        spots,
        eval_ids,
        eval_spots,
        grid,
        config,
        claim,
    )
    log.info(f"Обучение завершено: {config.epochs} эпох, {task_ids.size} траекторий")
    return params, history


def recalibrate(
    params: NetworkParams,
    new_task_paths: PathSet,
    arch: NetworkArch,
    config: TrainConfig,
    claim: Claim,
    eval_paths: Optional[PathSet] = None,
) -> TrainResult:

    """Функция перекалибровки сети на новую задачу.

    Таблица эмбеддингов растёт на одну строку с id m, строка
    инициализируется средним существующих строк. Оптимизируется только
    она, моменты Adam свежие. Общие веса и прежние строки не меняются.

    Args:
        params: обученные параметры на m задачах.
        new_task_paths: траектории новой задачи.
        arch: архитектура обученной сети (n_tasks = m).
        config: гиперпараметры в режиме EMBEDDING_ONLY с new_task_id = m.
        claim: обязательство.
        eval_paths: отложенные траектории новой задачи. По умолчанию None.

    Returns:
        Tuple[NetworkParams, List[TrainLogRow]]: параметры на m + 1 задачах и журнал.

    Raises:
        EmptyData: если траекторий новой задачи нет.
        IncompatibleData: при несовпадении архитектуры или new_task_id.
        InvalidConfig: если режим не EMBEDDING_ONLY.
    """

    if config.mode is not TrainMode.EMBEDDING_ONLY:
        raise InvalidConfig("Перекалибровка выполняется в режиме EMBEDDING_ONLY.")
    check_arch(params, arch)
    new_id = params.n_tasks
    if config.new_task_id != new_id:
        raise IncompatibleData(
            f"Новая задача должна получить id {new_id}, передан {config.new_task_id}",
        )
    if new_task_paths.n_paths == 0:
        raise EmptyData("Нет траекторий новой задачи.")

    grown = grow_embedding(params, params.embedding.mean(axis=0))
    log.debug(f"Строка эмбеддинга {new_id} инициализирована: {grown.embedding[new_id]}")
    if config.epochs == 0:
        return grown, []

    grid = new_task_paths.grid
    task_ids = np.full(new_task_paths.n_paths, new_id, dtype=np.int64)
    if eval_paths is None:
        eval_spots = np.empty((0, grid.n_steps + 1))
    else:
        eval_spots = eval_paths.spot
    eval_ids = np.full(eval_spots.shape[0], new_id, dtype=np.int64)
    recalibrated, history = _run_epochs(
        grown,
        task_ids,
        new_task_paths.spot,
        eval_ids,
        eval_spots,
        grid,
        config,
        claim,
        embedding_row=new_id,
    )
    log.info(f"Перекалибровка завершена: эмбеддинг {recalibrated.embedding[new_id]}")
    return recalibrated, history


def train_single_task(
    paths: PathSet,
    arch: NetworkArch,
    config: TrainConfig,
    claim: Claim,
    eval_paths: Optional[PathSet] = None,
) -> TrainResult:

    """Обучение сети с нуля на одной задаче (таблица из одной строки)."""

    single = replace(arch, n_tasks=1)
    relabeled = replace(paths, task_id=0)
    held_out = []
    if eval_paths is not None:
        held_out.append(replace(eval_paths, task_id=0))
    full = replace(config, mode=TrainMode.FULL, new_task_id=None)
    return train([relabeled], single, full, claim, held_out)


def network_path_deltas(
    params: NetworkParams,
    task_id: int,
    spots: np.ndarray,
    strike: float,
    grid: TimeGrid,
) -> np.ndarray:

    """Дельты сети по траекториям одной задачи [n_paths x n_steps]."""

    if not 0 <= task_id < params.n_tasks:
        raise IncompatibleData(f"task_id {task_id} вне таблицы эмбеддингов.")
    chunks = []
    for start in range(0, spots.shape[0], EVAL_CHUNK):
        chunk = spots[start : start + EVAL_CHUNK]
        ids = np.full(chunk.shape[0], task_id, dtype=np.int64)
        deltas, _ = network_deltas(params, ids, path_features(chunk, strike, grid))
        chunks.append(deltas)
    if not chunks:
        return np.empty((0, grid.n_steps))
    return np.concatenate(chunks)


def hedge_with_network(
    params: NetworkParams,
    task_id: int,
    paths: PathSet,
    claim: Claim,
) -> HedgeResult:

    """Хеджирование траекторий задачи обученной сетью.

    Args:
        params: параметры сети.
        task_id: строка эмбеддинга, которой хеджировать.
        paths: траектории.
        claim: обязательство.

    Returns:
        HedgeResult: дельты и PnL без премии.
    """

    deltas = network_path_deltas(params, task_id, paths.spot, claim.strike, paths.grid)
    result = hedge_result(claim, paths, deltas)
    return HedgeResult(result.deltas, result.pnl, result.premium, task_id)
