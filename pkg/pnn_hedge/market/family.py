import logging
import math
from dataclasses import MISSING, fields
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from ..config.structures import (
    MODEL_CLASSES,
    FamilyConfig,
    FamilyRule,
    GbmSpec,
    ModelKind,
    ModelSpec,
    ParameterRanges,
)
from ..exceptions import InvalidConfig

log = logging.getLogger(__name__)

SV_KINDS: Sequence[ModelKind] = (
    ModelKind.HESTON,
    ModelKind.HESTON_JUMP,
    ModelKind.BNS,
)

# ATM-волатильность на 30 дней примерно от 0.1 до 0.8
DEFAULT_SV_RANGES: ParameterRanges = {
    ModelKind.HESTON.value: {
        "kappa": (0.5, 5.0),
        "eta": (0.01, 0.5),
        "theta": (0.1, 1.0),
        "rho": (-0.9, -0.1),
    },
    ModelKind.HESTON_JUMP.value: {
        "kappa": (0.5, 5.0),
        "eta": (0.01, 0.5),
        "theta": (0.1, 1.0),
        "rho": (-0.9, -0.1),
        "lambda_j": (0.1, 2.0),
        "mu_j": (-0.15, 0.05),
        "sigma_j": (0.05, 0.25),
    },
    ModelKind.BNS.value: {
        "sigma0_sq": (0.01, 0.5),
        "lambda_bns": (0.5, 3.0),
        "a": (1.0, 10.0),
        "b": (10.0, 50.0),
        "rho_bns": (-2.0, 0.0),
    },
}


def _checked_range(name: str, bounds: Tuple[float, float]) -> Tuple[float, float]:
    try:
        low, high = (float(bound) for bound in bounds)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"Диапазон {name} должен быть парой чисел.") from exc
    if not (math.isfinite(low) and math.isfinite(high)) or low > high:
        raise InvalidConfig(f"Пустой или невалидный диапазон {name}: {bounds}")
    return low, high


def _sample_spec(
    kind: ModelKind,
    ranges: Mapping[str, Tuple[float, float]],
    rng: np.random.Generator,
) -> ModelSpec:
    model_class = MODEL_CLASSES[kind]
    values: Dict[str, float] = {}
    for spec_field in fields(model_class):
        if spec_field.name in ranges:
            low, high = _checked_range(spec_field.name, ranges[spec_field.name])
            values[spec_field.name] = float(rng.uniform(low, high))
        elif spec_field.default is MISSING:
            raise InvalidConfig(
                f"Нет диапазона параметра {spec_field.name} модели {kind.value}",
            )
    return model_class(**values)


def sample_sv_family(
    n_models: int,
    ranges: ParameterRanges = DEFAULT_SV_RANGES,
    seed: int = 0,
) -> List[ModelSpec]:

    """Функция случайного построения семейства моделей стохастической волатильности.

    Виды моделей чередуются: Хестон, Хестон со скачками, BNS. Параметры
    равномерны на заданных диапазонах.

    Args:
        n_models: число моделей.
        ranges: диапазоны параметров по видам моделей.
        seed: зерно.

    Returns:
        List[ModelSpec]: параметры моделей.

    Raises:
        InvalidConfig: при пустых или невалидных диапазонах.
        InvalidModelSpec: если выборка нарушила ограничения модели.
    """

    log.debug(f"Построение семейства из {n_models} моделей SV, seed {seed}")
    if n_models < 1:
        raise InvalidConfig(f"Число моделей должно быть >= 1: {n_models}")
    missing = [kind.value for kind in SV_KINDS if kind.value not in ranges]
    if missing:
        raise InvalidConfig(f"Нет диапазонов для моделей: {missing}")

    rng = np.random.default_rng(seed)
    family = []
    for i in range(n_models):
        kind = SV_KINDS[i % len(SV_KINDS)]
        family.append(_sample_spec(kind, ranges[kind.value], rng))
    return family


def sample_gbm_family(
    n_tasks: int,
    sigma_range: Tuple[float, float] = (0.1, 0.8),
    mu: float = 0.0,
    seed: int = 0,
) -> List[ModelSpec]:

    """Функция построения семейства GBM с равномерной волатильностью.

    Args:
        n_tasks: число задач.
        sigma_range: отрезок волатильностей.
        mu: общий снос.
        seed: зерно.

    Returns:
        List[ModelSpec]: параметры моделей GBM.
    """

    if n_tasks < 1:
        raise InvalidConfig(f"Число задач должно быть >= 1: {n_tasks}")
    low, high = _checked_range("sigma", sigma_range)
    sigmas = np.random.default_rng(seed).uniform(low, high, n_tasks)
    log.debug(f"Волатильности семейства GBM: {sigmas}")
    return [GbmSpec(mu, float(sigma)) for sigma in sigmas]


def resolve_family(family: FamilyConfig, seed: int) -> List[ModelSpec]:

    """Список моделей задач по правилу семейства.

    Raises:
        InvalidConfig: при пустом явном списке или невалидных диапазонах.
    """

    if family.rule is FamilyRule.EXPLICIT:
        if not family.models:
            raise InvalidConfig("Явное семейство моделей пусто.")
        return list(family.models)
    if family.rule is FamilyRule.GBM_UNIFORM:
        return sample_gbm_family(family.n_tasks, family.sigma_range, family.mu, seed)
    ranges = DEFAULT_SV_RANGES if family.sv_ranges is None else family.sv_ranges
    return sample_sv_family(family.n_tasks, ranges, seed)
