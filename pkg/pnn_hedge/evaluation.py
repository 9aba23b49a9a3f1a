import logging
import math
from typing import Any, Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from .baseline import bs_delta, bs_price
from .config.config import model_to_mapping
from .config.structures import (
    HedgeResult,
    ModelSpec,
    PnLStats,
    TaskPnL,
    VarianceAggregate,
)
from .exceptions import DomainError, EmptyData, IncompatibleData, InvalidConfig
from .neural.network import NetworkParams, embed, forward_batch

log = logging.getLogger(__name__)

IMPLIED_VOL_FLOOR = 1e-12
IMPLIED_VOL_CEILING = 1e4
IMPLIED_VOL_XTOL = 1e-10

Row = Dict[str, Any]


def _task_pnls(results: Sequence[HedgeResult]) -> List[np.ndarray]:
    if not results:
        raise EmptyData("Нет результатов хеджирования.")
    task_ids = [result.task_id for result in results]
    if len(set(task_ids)) != len(task_ids):
        raise IncompatibleData(f"Повторяющиеся идентификаторы задач: {task_ids}")
    pnls = [np.asarray(result.pnl, dtype=np.float64) for result in results]
    if any(pnl.size < 2 for pnl in pnls):
        raise EmptyData("Для статистик нужно >= 2 значений PnL на задачу.")
    return pnls


def pnl_stats(results: Sequence[HedgeResult]) -> PnLStats:

    """Функция статистик PnL по семейству задач.

    Среднее и стандартное отклонение по объединению PnL всех задач,
    крайние стандартные отклонения задач и эмпирические квантили
    1% и 10% с линейной интерполяцией. Везде знаменатель n - 1.

    Args:
        results: результаты хеджирования задач.

    Returns:
        PnLStats: статистики.

    Raises:
        EmptyData: если задач нет или у задачи меньше двух PnL.
        IncompatibleData: если идентификаторы задач повторяются.
    """

    pnls = _task_pnls(results)
    pooled = np.concatenate(pnls)
    per_task = tuple(
        TaskPnL(
            result.task_id,
            float(pnl.mean()),
            float(pnl.std(ddof=1)),
            float(pnl.var(ddof=1)),
        )
        for result, pnl in zip(results, pnls)
    )
    stds = [task.std for task in per_task]
    q01, q10 = np.quantile(pooled, [0.01, 0.10])
    return PnLStats(
        float(pooled.mean()),
        float(pooled.std(ddof=1)),
        min(stds),
        max(stds),
        float(q01),
        float(q10),
        per_task,
    )


def variance_aggregate(results: Sequence[HedgeResult]) -> VarianceAggregate:

    """Среднее, медиана и максимум дисперсий PnL задач."""

    variances = np.array([pnl.var(ddof=1) for pnl in _task_pnls(results)])
    return VarianceAggregate(
        float(variances.mean()),
        float(np.median(variances)),
        float(variances.max()),
    )


def histogram(
    pnls: np.ndarray,
    n_bins: int,
    value_range: Tuple[float, float],
) -> Tuple[np.ndarray, np.ndarray]:

    """Гистограмма с равными корзинами на отрезке; выбросы попадают в крайние.

    Returns:
        Tuple[np.ndarray, np.ndarray]: границы [n_bins + 1] и счётчики [n_bins].

    Raises:
        InvalidConfig: если n_bins < 1.
        DomainError: если отрезок пуст или перевёрнут.
    """

    if n_bins < 1:
        raise InvalidConfig(f"Число корзин должно быть >= 1: {n_bins}")
    low, high = value_range
    if not low < high:
        raise DomainError(f"Перевёрнутый отрезок гистограммы: {value_range}")
    clipped = np.clip(np.asarray(pnls, dtype=np.float64), low, high)
    counts, edges = np.histogram(clipped, bins=n_bins, range=(low, high))
    return edges, counts


def delta_slice(
    params: NetworkParams,
    task_id: int,
    tau: float,
    spots: np.ndarray,
    strike: float = 1.0,
) -> Tuple[np.ndarray, np.ndarray]:

    """Дельта сети как функция цены при фиксированном оставшемся сроке.

    Args:
        params: параметры сети.
        task_id: задача.
        tau: оставшийся срок, > 0.
        spots: сетка цен.
        strike: страйк. По умолчанию 1.

    Returns:
        Tuple[np.ndarray, np.ndarray]: цены и дельты.

    Raises:
        DomainError: если tau <= 0.
    """

    if not tau > 0:
        raise DomainError(f"Оставшийся срок должен быть > 0: {tau}")
    embed(params, task_id)
    spots = np.asarray(spots, dtype=np.float64)
    features = np.column_stack([np.log(spots / strike), np.full(spots.shape, tau)])
    deltas, _ = forward_batch(params, np.full(spots.shape, task_id), features)
    return spots, deltas


def bs_delta_slice(
    sigma: float,
    tau: float,
    spots: np.ndarray,
    strike: float = 1.0,
) -> np.ndarray:
    return bs_delta(np.asarray(spots, dtype=np.float64), strike, sigma, tau)


def implied_vol(price: float, s: float, strike: float, tau: float) -> float:

    """Функция обращения цены Блэка-Шоулза по волатильности.

    Корень bs_price(sigma) = price ищется бисекцией; нижняя граница
    1e-12, верхняя удваивается, пока не накроет корень.

    Args:
        price: цена колл-опциона.
        s: цена базового актива.
        strike: страйк.
        tau: оставшийся срок.

    Returns:
        float: подразумеваемая волатильность.

    Raises:
        DomainError: если цена вне безарбитражных границ ((s - K)^+, s).
    """

    if not tau > 0:
        raise DomainError(f"Оставшийся срок должен быть > 0: {tau}")
    intrinsic = max(s - strike, 0.0)
    if not intrinsic < price < s:
        raise DomainError(f"Цена {price} вне границ ({intrinsic}, {s})")

    def mispricing(sigma: float) -> float:
        return float(bs_price(s, strike, sigma, tau)) - price

    if mispricing(IMPLIED_VOL_FLOOR) >= 0:
        return IMPLIED_VOL_FLOOR
    upper = 1.0
    while mispricing(upper) <= 0:
        upper *= 2.0
        if upper > IMPLIED_VOL_CEILING:
            raise DomainError(f"Не удалось ограничить волатильность для цены {price}")
    root = bisect(
        mispricing,
        IMPLIED_VOL_FLOOR,
        upper,
        xtol=IMPLIED_VOL_XTOL,
        maxiter=200,
    )
    return float(root)


def export_embeddings(
    params: NetworkParams,
    models: Sequence[ModelSpec],
    atm_prices: Sequence[float],
) -> List[Row]:

    """Строки таблицы эмбеддингов: задача, модель, параметры, компоненты, цена ATM.

    Args:
        params: обученные параметры.
        models: модели задач в порядке task_id.
        atm_prices: цены ATM задач.

    Returns:
        List[Row]: по строке на задачу.

    Raises:
        EmptyData: если число моделей не совпадает с таблицей эмбеддингов.
    """

    if not len(models) == len(atm_prices) == params.n_tasks:
        raise EmptyData(
            f"Ожидалось {params.n_tasks} моделей и цен, "
            f"передано {len(models)} и {len(atm_prices)}",
        )
    rows = []
    for task_id, (model, price) in enumerate(zip(models, atm_prices)):
        descriptor = model_to_mapping(model)
        row: Row = {"task_id": task_id, "kind": descriptor.pop("kind")}
        row.update({f"param_{name}": value for name, value in descriptor.items()})
        row.update(
            {
                f"embedding_{i}": float(component)
                for i, component in enumerate(params.embedding[task_id])
            },
        )
        row["atm_price"] = float(price)
        rows.append(row)
    return rows


def per_task_table(
    results: Sequence[HedgeResult],
    bs_results: Sequence[HedgeResult] = (),
) -> List[Row]:

    """Статистики каждой задачи рядом со стандартным отклонением BS-хеджа."""

    stats = pnl_stats(results)
    bs_std = {
        result.task_id: float(np.std(result.pnl, ddof=1)) for result in bs_results
    }
    return [
        {
            "task_id": task.task_id,
            "mean": task.mean,
            "std": task.std,
            "variance": task.variance,
            "premium": result.premium,
            "bs_std": bs_std.get(task.task_id, math.nan),
        }
        for task, result in zip(stats.per_task, results)
    ]


def pnl_stats_row(simulations_per_task: int, stats: PnLStats) -> Row:
    return {
        "simulations_per_task": simulations_per_task,
        "mean": stats.mean,
        "std": stats.std,
        "std_min": stats.std_min,
        "std_max": stats.std_max,
        "q01": stats.quantile_1pct,
        "q10": stats.quantile_10pct,
    }


def sim_count_sweep(
    run: Callable[[int], Sequence[HedgeResult]],
    paths_per_task: Iterable[int],
) -> List[Row]:

    """Строки статистик PnL для нескольких объёмов симуляции на задачу.

    Args:
        run: полный прогон эксперимента для заданного числа траекторий.
        paths_per_task: объёмы симуляции.

    Returns:
        List[Row]: строка pnl_stats на каждый объём.
    """

    rows = []
    for count in paths_per_task:
        log.info(f"Прогон с {count} траекториями на задачу")
        rows.append(pnl_stats_row(count, pnl_stats(run(count))))
    return rows


def atm_implied_vols(
    results: Sequence[HedgeResult],
    s0: float,
    strike: float,
    maturity: float,
) -> List[Row]:

    """Подразумеваемые волатильности премий задач.

    Премия вне безарбитражных границ даёт NaN и предупреждение в журнале.
    """

    rows = []
    for result in results:
        try:
            vol = implied_vol(result.premium, s0, strike, maturity)
        except DomainError:
            log.warning(f"Задача {result.task_id}: премия {result.premium} вне границ")
            vol = math.nan
        rows.append(
            {
                "task_id": result.task_id,
                "atm_price": result.premium,
                "implied_vol": vol,
            },
        )
    return rows
