import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from ..exceptions import IncompatibleData, InvalidConfig, InvalidModelSpec


class StatusType(Enum):

    """Enum перечисление статусов выполнения команд.

    Attributes:
        _SUCCESS: успешное выполнение, код выхода 0
        _BAD_CONFIG: ошибка использования или конфигурации, код выхода 1
        _NUMERICAL_FAILURE: расхождение обучения (NaN), код выхода 2

    """

    _SUCCESS = {
        "code": 0,
        "message": "OK",
        "description": "",
    }
    _BAD_CONFIG = {
        "code": 1,
        "message": "Bad Config",
        "description": "Invalid usage, configuration or input data.",
    }
    _NUMERICAL_FAILURE = {
        "code": 2,
        "message": "Numerical Failure",
        "description": "Training diverged: loss is not a finite number.",
    }

    def __init__(self, status_content: Mapping):
        self.code = status_content["code"]
        self.message = status_content["message"]
        self.description = status_content["description"]


class ModelKind(Enum):

    """Enum перечисление семейств моделей рынка.

    Attributes:
        GBM: геометрическое броуновское движение.
        HESTON: модель стохастической волатильности Хестона.
        HESTON_JUMP: модель Хестона со скачками цены.
        BNS: модель Барндорфф-Нильсена-Шепарда.

    """

    GBM = "gbm"
    HESTON = "heston"
    HESTON_JUMP = "heston_jump"
    BNS = "bns"


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidModelSpec(message)


def _finite(*values: float) -> bool:
    return all(math.isfinite(value) for value in values)


@dataclass(frozen=True)
class TimeGrid:

    """Класс данных равномерной сетки торговых дат.

    Attributes:
        n_steps: количество торговых интервалов.
        maturity: срок до экспирации в долях года.
    """

    n_steps: int
    maturity: float

    def __post_init__(self) -> None:
        if not isinstance(self.n_steps, int) or self.n_steps < 1:
            raise InvalidConfig(f"n_steps должен быть >= 1: {self.n_steps}")
        if not _finite(self.maturity) or self.maturity <= 0:
            raise InvalidConfig(f"Срок экспирации должен быть > 0: {self.maturity}")

    @property
    def dt(self) -> float:
        return self.maturity / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.maturity, self.n_steps + 1)

    @property
    def time_to_maturity(self) -> np.ndarray:
        """Оставшийся срок на каждой дате ребалансировки t_0..t_{n-1}."""
        return self.maturity - self.times[:-1]


@dataclass(frozen=True)
class GbmSpec:

    """Параметры геометрического броуновского движения.

    Attributes:
        mu: снос в год.
        sigma: волатильность.
    """

    kind: ClassVar[ModelKind] = ModelKind.GBM

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        _require(_finite(self.mu, self.sigma), "Параметры GBM должны быть конечны.")
        _require(self.sigma >= 0, f"sigma должна быть >= 0: {self.sigma}")


@dataclass(frozen=True)
class HestonSpec:

    """Параметры модели Хестона.

    Attributes:
        kappa: скорость возврата к среднему.
        eta: долгосрочная дисперсия.
        theta: волатильность дисперсии.
        rho: корреляция броуновских движений.
        v0: начальная дисперсия, по умолчанию равна eta.
    """

    kind: ClassVar[ModelKind] = ModelKind.HESTON

    kappa: float
    eta: float
    theta: float
    rho: float
    v0: Optional[float] = None

    def __post_init__(self) -> None:
        _validate_heston(self.kappa, self.eta, self.theta, self.rho, self.v0)

    @property
    def initial_variance(self) -> float:
        return self.eta if self.v0 is None else self.v0


@dataclass(frozen=True)
class HestonJumpSpec:

    """Параметры модели Хестона со скачками.

    Attributes:
        kappa, eta, theta, rho, v0: как в HestonSpec.
        lambda_j: интенсивность скачков в год.
        mu_j: средний относительный размер скачка.
        sigma_j: стандартное отклонение log(1 + J).
    """

    kind: ClassVar[ModelKind] = ModelKind.HESTON_JUMP

    kappa: float
    eta: float
    theta: float
    rho: float
    lambda_j: float
    mu_j: float
    sigma_j: float
    v0: Optional[float] = None

    def __post_init__(self) -> None:
        _validate_heston(self.kappa, self.eta, self.theta, self.rho, self.v0)
        _require(
            _finite(self.lambda_j, self.mu_j, self.sigma_j),
            "Параметры скачков должны быть конечны.",
        )
        _require(self.lambda_j >= 0, f"lambda_j должна быть >= 0: {self.lambda_j}")
        _require(self.mu_j > -1, f"mu_j должна быть > -1: {self.mu_j}")
        _require(self.sigma_j >= 0, f"sigma_j должна быть >= 0: {self.sigma_j}")

    @property
    def initial_variance(self) -> float:
        return self.eta if self.v0 is None else self.v0

    @property
    def diffusion(self) -> HestonSpec:
        return HestonSpec(self.kappa, self.eta, self.theta, self.rho, self.v0)


@dataclass(frozen=True)
class BnsSpec:

    """Параметры модели Барндорфф-Нильсена-Шепарда (Gamma-OU).

    Attributes:
        sigma0_sq: начальная дисперсия.
        lambda_bns: скорость затухания процесса OU.
        a: интенсивность скачков субординатора.
        b: обратный средний размер скачка.
        rho_bns: константа эффекта рычага.
    """

    kind: ClassVar[ModelKind] = ModelKind.BNS

    sigma0_sq: float
    lambda_bns: float
    a: float
    b: float
    rho_bns: float

    def __post_init__(self) -> None:
        _require(
            _finite(self.sigma0_sq, self.lambda_bns, self.a, self.b, self.rho_bns),
            "Параметры BNS должны быть конечны.",
        )
        _require(self.sigma0_sq >= 0, f"sigma0_sq должна быть >= 0: {self.sigma0_sq}")
        _require(self.lambda_bns > 0, f"lambda_bns должна быть > 0: {self.lambda_bns}")
        _require(self.a > 0, f"a должна быть > 0: {self.a}")
        _require(self.b > 0, f"b должна быть > 0: {self.b}")
        _require(self.rho_bns <= 0, f"rho_bns должна быть <= 0: {self.rho_bns}")
        _require(
            self.b - self.rho_bns > 0,
            f"Кумулянта не определена в -rho: b - rho = {self.b - self.rho_bns}",
        )


def _validate_heston(
    kappa: float,
    eta: float,
    theta: float,
    rho: float,
    v0: Optional[float],
) -> None:
    _require(_finite(kappa, eta, theta, rho), "Параметры Хестона должны быть конечны.")
    _require(kappa > 0, f"kappa должна быть > 0: {kappa}")
    _require(eta > 0, f"eta должна быть > 0: {eta}")
    # theta = 0 допустима: вырожденная детерминированная дисперсия
    _require(theta >= 0, f"theta должна быть >= 0: {theta}")
    _require(-1 <= rho <= 1, f"rho должна лежать в [-1, 1]: {rho}")
    if v0 is not None:
        _require(_finite(v0) and v0 >= 0, f"v0 должна быть >= 0: {v0}")


ModelSpec = Union[GbmSpec, HestonSpec, HestonJumpSpec, BnsSpec]

MODEL_CLASSES: Mapping[ModelKind, Any] = {
    ModelKind.GBM: GbmSpec,
    ModelKind.HESTON: HestonSpec,
    ModelKind.HESTON_JUMP: HestonJumpSpec,
    ModelKind.BNS: BnsSpec,
}


@dataclass(frozen=True, eq=False)
class PathSet:

    """Класс данных для хранения смоделированных траекторий одной задачи.

    Attributes:
        task_id: идентификатор задачи (строка таблицы эмбеддингов).
        spot: матрица цен [n_paths x (n_steps + 1)].
        variance: матрица мгновенной дисперсии или None для GBM.
        seed: зерно генератора задачи.
        grid: сетка торговых дат.
        model: параметры модели.
    """

    task_id: int
    spot: np.ndarray
    variance: Optional[np.ndarray]
    seed: int
    grid: TimeGrid
    model: ModelSpec

    def __post_init__(self) -> None:
        if self.task_id < 0:
            raise IncompatibleData(f"task_id должен быть >= 0: {self.task_id}")
        if self.spot.ndim != 2 or self.spot.shape[1] != self.grid.n_steps + 1:
            raise IncompatibleData(
                f"Размер матрицы цен {self.spot.shape} не согласован с сеткой "
                f"из {self.grid.n_steps} шагов.",
            )
        if self.variance is not None and self.variance.shape != self.spot.shape:
            raise IncompatibleData("Размеры матриц цены и дисперсии различаются.")

    @property
    def n_paths(self) -> int:
        return int(self.spot.shape[0])

    @property
    def s0(self) -> float:
        return float(self.spot[0, 0])

    @property
    def terminal(self) -> np.ndarray:
        return self.spot[:, -1]

    def select(self, index: Union[slice, np.ndarray]) -> "PathSet":
        """Подмножество траекторий по индексу строк."""
        variance = None if self.variance is None else self.variance[index]
        return PathSet(
            self.task_id,
            self.spot[index],
            variance,
            self.seed,
            self.grid,
            self.model,
        )


class Position(Enum):

    """Направление позиции по опциону.

    Attributes:
        LONG: длинная позиция, знак +1.
        SHORT: короткая позиция, знак -1.
    """

    LONG = 1
    SHORT = -1

    @property
    def sign(self) -> int:
        return int(self.value)


class ClaimKind(Enum):

    """Виды платёжных обязательств."""

    EUROPEAN_CALL = "european_call"


@dataclass(frozen=True)
class Claim:

    """Класс данных платёжного обязательства.

    Attributes:
        strike: цена исполнения K.
        position: направление позиции.
        kind: вид обязательства.
    """

    strike: float
    position: Position = Position.SHORT
    kind: ClaimKind = ClaimKind.EUROPEAN_CALL

    def __post_init__(self) -> None:
        if not _finite(self.strike) or self.strike <= 0:
            raise InvalidConfig(f"Страйк должен быть > 0: {self.strike}")


@dataclass(frozen=True, eq=False)
class HedgeResult:

    """Результат хеджирования одной задачи.

    Attributes:
        deltas: позиции в базовом активе [n_paths x n_steps].
        pnl: итоговый PnL без премии [n_paths].
        premium: премия p0, отчитывается отдельно.
        task_id: идентификатор задачи.
    """

    deltas: np.ndarray
    pnl: np.ndarray
    premium: float
    task_id: int

    def __post_init__(self) -> None:
        if self.pnl.ndim != 1 or self.deltas.shape[0] != self.pnl.shape[0]:
            raise IncompatibleData("Число PnL не совпадает с числом траекторий.")
        if not np.all(np.isfinite(self.deltas)):
            raise IncompatibleData("Дельты содержат нечисловые значения.")


@dataclass(frozen=True)
class NetworkArch:

    """Архитектура параметризованной сети.

    Attributes:
        n_tasks: число задач m (строк таблицы эмбеддингов).
        embed_dim: размерность эмбеддинга l.
        n_features: число рыночных признаков.
        hidden: ширины скрытых слоёв.
        activation: функция активации скрытых слоёв.
    """

    n_tasks: int
    embed_dim: int
    n_features: int = 2
    hidden: Tuple[int, ...] = (128, 128, 128)
    activation: str = "selu"

    def __post_init__(self) -> None:
        if self.n_tasks < 1:
            raise InvalidConfig(f"Число задач должно быть >= 1: {self.n_tasks}")
        if self.embed_dim < 1:
            raise InvalidConfig(f"Размерность эмбеддинга >= 1: {self.embed_dim}")
        if self.n_features < 1 or any(width < 1 for width in self.hidden):
            raise InvalidConfig(f"Ширины слоёв должны быть > 0: {self.hidden}")
        if self.activation != "selu":
            raise InvalidConfig(f"Неподдерживаемая активация: {self.activation}")

    @property
    def layer_sizes(self) -> Tuple[int, ...]:
        return (self.n_features + self.embed_dim, *self.hidden, 1)


class TrainMode(Enum):

    """Режимы обучения.

    Attributes:
        FULL: обучение всех параметров на всех задачах.
        EMBEDDING_ONLY: обучение только строки эмбеддинга новой задачи.
    """

    FULL = "full"
    EMBEDDING_ONLY = "embedding_only"


@dataclass(frozen=True)
class TrainConfig:

    """Гиперпараметры обучения.

    Attributes:
        batch_size: размер мини-батча.
        epochs: число эпох.
        lr_initial: начальная скорость обучения.
        lr_final: конечная скорость обучения.
        beta1, beta2, eps: параметры Adam.
        seed: зерно инициализации и перемешивания.
        mode: режим обучения.
        new_task_id: идентификатор новой задачи для EMBEDDING_ONLY.
    """

    batch_size: int = 1024
    epochs: int = 1000
    lr_initial: float = 5e-4
    lr_final: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    mode: TrainMode = TrainMode.FULL
    new_task_id: Optional[int] = None

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise InvalidConfig(f"batch_size должен быть >= 1: {self.batch_size}")
        if self.epochs < 0:
            raise InvalidConfig(f"epochs должно быть >= 0: {self.epochs}")
        if not 0 < self.lr_final <= self.lr_initial:
            raise InvalidConfig(
                f"Требуется 0 < lr_final <= lr_initial: "
                f"{self.lr_final}, {self.lr_initial}",
            )
        if self.mode is TrainMode.EMBEDDING_ONLY and self.new_task_id is None:
            raise InvalidConfig("Для EMBEDDING_ONLY нужен new_task_id.")


class TrainLogRow(NamedTuple):

    """Строка журнала обучения.

    Attributes:
        epoch: номер эпохи, начиная с 1.
        learning_rate: скорость обучения на последнем шаге эпохи.
        train_loss: средняя потеря по батчам эпохи.
        eval_loss: потеря на отложенной выборке или NaN.
    """

    epoch: int
    learning_rate: float
    train_loss: float
    eval_loss: float


class TaskPnL(NamedTuple):

    """Статистики PnL одной задачи."""

    task_id: int
    mean: float
    std: float
    variance: float


class PnLStats(NamedTuple):

    """Агрегированные статистики PnL по всем задачам.

    Attributes:
        mean: среднее по объединению задач.
        std: стандартное отклонение по объединению задач.
        std_min, std_max: крайние значения стандартных отклонений задач.
        quantile_1pct, quantile_10pct: эмпирические квантили объединения.
        per_task: статистики каждой задачи.
    """

    mean: float
    std: float
    std_min: float
    std_max: float
    quantile_1pct: float
    quantile_10pct: float
    per_task: Tuple[TaskPnL, ...]


class VarianceAggregate(NamedTuple):

    """Агрегаты дисперсий PnL задач."""

    mean_variance: float
    median_variance: float
    max_variance: float


class FamilyRule(Enum):

    """Правила построения семейства моделей.

    Attributes:
        EXPLICIT: явный список моделей.
        GBM_UNIFORM: GBM с волатильностью, равномерной на отрезке.
        SV_SAMPLE: модели стохастической волатильности из диапазонов.
    """

    EXPLICIT = "explicit"
    GBM_UNIFORM = "gbm_uniform"
    SV_SAMPLE = "sv_sample"


ParameterRanges = Mapping[str, Mapping[str, Tuple[float, float]]]


@dataclass(frozen=True)
class FamilyConfig:

    """Описание семейства моделей эксперимента."""

    rule: FamilyRule
    n_tasks: int = 0
    models: Tuple[ModelSpec, ...] = ()
    sigma_range: Tuple[float, float] = (0.1, 0.8)
    mu: float = 0.0
    sv_ranges: Optional[ParameterRanges] = None

    def __post_init__(self) -> None:
        if self.rule is not FamilyRule.EXPLICIT and self.n_tasks < 1:
            raise InvalidConfig(f"Число задач должно быть >= 1: {self.n_tasks}")
        if self.rule is FamilyRule.EXPLICIT and not self.models:
            raise InvalidConfig("Явное семейство моделей пусто.")

    @property
    def size(self) -> int:
        return len(self.models) if self.rule is FamilyRule.EXPLICIT else self.n_tasks


@dataclass(frozen=True)
class ArchConfig:

    """Настраиваемая часть архитектуры: n_tasks выводится из семейства."""

    embed_dim: int = 1
    hidden: Tuple[int, ...] = (128, 128, 128)

    def __post_init__(self) -> None:
        if self.embed_dim < 1:
            raise InvalidConfig(f"Размер эмбеддинга должен быть >= 1: {self.embed_dim}")
        if not self.hidden or min(self.hidden) < 1:
            raise InvalidConfig(f"Ширины скрытых слоёв должны быть >= 1: {self.hidden}")


@dataclass(frozen=True)
class RecalibrationConfig:

    """Протокол перекалибровки на новой задаче.

    Attributes:
        model: модель новой задачи.
        train_paths: объёмы обучающих выборок для сравнения.
        eval_paths: объём отложенной выборки.
        seed: зерно симуляции новой задачи.
        epochs: число эпох, по умолчанию как при обучении.
    """

    model: ModelSpec
    train_paths: Tuple[int, ...] = (10, 100, 1000)
    eval_paths: int = 10000
    seed: int = 0
    epochs: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.train_paths or min(self.train_paths) < 1:
            raise InvalidConfig(f"Объёмы обучения должны быть >= 1: {self.train_paths}")
        if self.eval_paths < 2:
            raise InvalidConfig(f"Отложенная выборка < 2: {self.eval_paths}")
        if self.epochs is not None and self.epochs < 0:
            raise InvalidConfig(f"epochs должно быть >= 0: {self.epochs}")


@dataclass(frozen=True)
class ReportConfig:

    """Параметры отчётов."""

    paths_per_task_sweep: Tuple[int, ...] = ()
    histogram_bins: int = 60
    histogram_range: Tuple[float, float] = (-0.2, 0.05)
    delta_tau: float = 10 / 365
    delta_spots: Tuple[float, float, int] = (0.8, 1.2, 41)
    vol_shift: float = 0.05

    def __post_init__(self) -> None:
        if self.histogram_bins < 1:
            raise InvalidConfig(f"Число корзин >= 1: {self.histogram_bins}")
        if not self.histogram_range[0] < self.histogram_range[1]:
            raise InvalidConfig(f"Перевёрнутый отрезок: {self.histogram_range}")
        if not self.delta_tau > 0 or self.delta_spots[2] < 1:
            raise InvalidConfig("Срез дельт требует tau > 0 и хотя бы одну цену.")
        if any(count < 2 for count in self.paths_per_task_sweep):
            raise InvalidConfig(f"Объёмы сравнения >= 2: {self.paths_per_task_sweep}")

    @property
    def spot_grid(self) -> np.ndarray:
        low, high, count = self.delta_spots
        return np.linspace(low, high, int(count))


@dataclass(frozen=True)
class ExperimentConfig:

    """Полная конфигурация эксперимента."""

    name: str
    family: FamilyConfig
    grid: TimeGrid
    claim: Claim
    s0: float
    paths_per_task: int
    arch: ArchConfig
    train: TrainConfig
    output_dir: str
    seed: int
    train_fraction: float = 0.8
    recalibration: Optional[RecalibrationConfig] = None
    report: ReportConfig = field(default_factory=ReportConfig)

    def __post_init__(self) -> None:
        if not self.name:
            raise InvalidConfig("Не задано имя эксперимента.")
        if not _finite(self.s0) or self.s0 <= 0:
            raise InvalidConfig(f"Начальная цена должна быть > 0: {self.s0}")
        if self.paths_per_task < 2:
            raise InvalidConfig(f"Траекторий на задачу < 2: {self.paths_per_task}")
        if not 0 < self.train_fraction <= 1:
            raise InvalidConfig(f"Доля обучения вне (0, 1]: {self.train_fraction}")


class EvaluateFlags(NamedTuple):

    """Флаги выбора выходных файлов оценки."""

    stats: bool = False
    variance: bool = False
    histograms: bool = False
    delta_slices: bool = False
    embeddings: bool = False
    implied_vols: bool = False
    baseline: bool = False

    @classmethod
    def everything(cls) -> "EvaluateFlags":
        return cls(*([True] * len(cls._fields)))
