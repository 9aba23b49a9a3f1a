import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..exceptions import DimensionMismatch, DomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OptimizerState:

    """Состояние Adam: моменты, конгруэнтные параметрам, и счётчик шагов.

    Attributes:
        first: первые моменты.
        second: вторые моменты.
        step: число выполненных шагов.
    """

    first: Tuple[np.ndarray, ...]
    second: Tuple[np.ndarray, ...]
    step: int = 0


def init_state(params: Sequence[np.ndarray]) -> OptimizerState:
    zeros = tuple(np.zeros_like(tensor) for tensor in params)
    return OptimizerState(zeros, tuple(np.zeros_like(tensor) for tensor in params))


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[List[np.ndarray], OptimizerState]:

    """Шаг Adam с поправкой смещения моментов.

    Args:
        params: тензоры параметров.
        grads: градиенты тех же форм.
        state: текущее состояние оптимизатора.
        lr: скорость обучения.
        beta1, beta2, eps: параметры Adam.

    Returns:
        Tuple[List[np.ndarray], OptimizerState]: новые параметры и состояние.

    Raises:
        DimensionMismatch: при неконгруэнтных тензорах.
    """

    if not (len(params) == len(grads) == len(state.first)) or any(
        p.shape != g.shape or p.shape != m.shape
        for p, g, m in zip(params, grads, state.first)
    ):
        raise DimensionMismatch("Параметры, градиенты и моменты Adam неконгруэнтны.")

    step = state.step + 1
    first_correction = 1.0 - beta1**step
    second_correction = 1.0 - beta2**step
    new_params, new_first, new_second = [], [], []
    for param, grad, first, second in zip(params, grads, state.first, state.second):
        first = beta1 * first + (1.0 - beta1) * grad
        second = beta2 * second + (1.0 - beta2) * grad * grad
        scale = np.sqrt(second / second_correction) + eps
        update = (first / first_correction) / scale
        new_params.append(param - lr * update)
        new_first.append(first)
        new_second.append(second)
    return new_params, OptimizerState(tuple(new_first), tuple(new_second), step)


def lr_schedule(
    step: int,
    total_steps: int,
    lr_initial: float,
    lr_final: float,
) -> float:

    """Экспоненциальное затухание lr_initial * (lr_final / lr_initial)^(step / total).

    Концы отрезка возвращаются точно.

    Raises:
        DomainError: если total_steps = 0 или step вне [0, total_steps].
    """

    if total_steps <= 0:
        raise DomainError(f"Число шагов расписания должно быть > 0: {total_steps}")
    if not 0 <= step <= total_steps:
        raise DomainError(f"Шаг {step} вне расписания из {total_steps} шагов")
    if step == total_steps:
        return lr_final
    return lr_initial * (lr_final / lr_initial) ** (step / total_steps)
