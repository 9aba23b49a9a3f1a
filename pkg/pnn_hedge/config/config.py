from dataclasses import asdict, replace
from json import load
from logging import getLogger
from pathlib import PurePath
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from ..exceptions import InvalidConfig, InvalidModelSpec
from .structures import (
    MODEL_CLASSES,
    ArchConfig,
    Claim,
    ClaimKind,
    ExperimentConfig,
    FamilyConfig,
    FamilyRule,
    ModelKind,
    ModelSpec,
    Position,
    RecalibrationConfig,
    ReportConfig,
    TimeGrid,
    TrainConfig,
    TrainMode,
)

log = getLogger(__name__)

SCHEMA_VERSION = 1


class AppConfig:
    """Класс для хранения настроек эксперимента и переопределения их."""

    def __init__(
        self,
        config: Optional[Mapping] = None,
        config_path: Union[PurePath, None] = None,
    ) -> None:
        """
        Создание обьекта для хранения настроек эксперимента

        Args:
            config (Mapping): параметры конфигурации. По умолчанию {}.
            config_path (Union[PurePath, None]): путь к файлу конфигурации.
            По умолчанию None.
        """
        self.config: Mapping = {} if config is None else config
        self._config_path = config_path

    @property
    def config_path(self) -> Union[PurePath, None]:
        return self._config_path

    @config_path.setter
    def config_path(self, value: Union[PurePath, str]) -> None:
        if not any([isinstance(value, str), isinstance(value, PurePath)]):
            raise TypeError("Path must be in string format.")
        if isinstance(value, str):
            value = PurePath(value)
        self._config_path = PurePath(value)

    def load_config(self) -> None:
        """Метод для генерации конфигурационного атрибута.

        Raises:
            InvalidConfig: если файл не читается или не является JSON.
        """

        if self.config_path is None:
            self._config_path = PurePath(__file__).with_name("config.json")

        path_to_config = str(self.config_path)
        log.debug(f"Загрузка конфигурации: {path_to_config}")
        try:
            with open(path_to_config, encoding="utf-8") as file:
                self.config = load(file)
        except OSError as exc:
            raise InvalidConfig(f"Не удалось прочитать {path_to_config}") from exc
        except ValueError as exc:
            raise InvalidConfig(f"Файл {path_to_config} не является JSON.") from exc

    def experiment(
        self,
        *,
        output_dir: Optional[str] = None,
        seed: Optional[int] = None,
    ) -> ExperimentConfig:

        """Метод проверки конфигурации и сборки ExperimentConfig.

        Args:
            output_dir: переопределение выходной директории.
            seed: переопределение глобального зерна.

        Returns:
            ExperimentConfig: проверенная конфигурация.

        Raises:
            InvalidConfig: при нарушении схемы.
            InvalidModelSpec: при невалидных параметрах модели.
        """

        experiment = experiment_from_mapping(self.config)
        if output_dir is not None:
            experiment = replace(experiment, output_dir=output_dir)
        if seed is not None:
            experiment = replace(experiment, seed=int(seed))
        log.debug(f"Конфигурация эксперимента: {experiment}")
        return experiment


def model_to_mapping(model: ModelSpec) -> Dict[str, Any]:
    """Тегированный дескриптор модели: kind и поля параметров."""
    return {"kind": model.kind.value, **asdict(model)}


def model_from_mapping(mapping: Mapping[str, Any]) -> ModelSpec:

    """Функция разбора дескриптора модели.

    Args:
        mapping: дескриптор с ключом kind.

    Returns:
        ModelSpec: параметры модели.

    Raises:
        InvalidModelSpec: при неизвестном виде или составе параметров.
    """

    values = dict(mapping)
    try:
        kind = ModelKind(values.pop("kind"))
    except (KeyError, ValueError) as exc:
        raise InvalidModelSpec(f"Неизвестный вид модели: {mapping}") from exc
    try:
        return MODEL_CLASSES[kind](**values)
    except TypeError as exc:
        raise InvalidModelSpec(f"Неверный состав параметров {kind.value}") from exc


def _section(mapping: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    try:
        section = mapping[name]
    except KeyError as exc:
        raise InvalidConfig(f"В конфигурации нет раздела {name}") from exc
    if not isinstance(section, Mapping):
        raise InvalidConfig(f"Раздел {name} должен быть объектом.")
    return section


def _pair(value: Any, name: str) -> Tuple[float, float]:
    try:
        low, high = (float(item) for item in value)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"{name} должен быть парой чисел: {value}") from exc
    return low, high


def _family_from_mapping(mapping: Mapping[str, Any]) -> FamilyConfig:
    rule = FamilyRule(mapping["rule"])
    if rule is FamilyRule.EXPLICIT:
        models = tuple(model_from_mapping(model) for model in mapping["models"])
        return FamilyConfig(rule, len(models), models)
    if rule is FamilyRule.GBM_UNIFORM:
        return FamilyConfig(
            rule,
            int(mapping["n_tasks"]),
            sigma_range=_pair(mapping.get("sigma_range", (0.1, 0.8)), "sigma_range"),
            mu=float(mapping.get("mu", 0.0)),
        )
    ranges = mapping.get("sv_ranges")
    if ranges is not None:
        ranges = {
            kind: {name: _pair(bounds, name) for name, bounds in params.items()}
            for kind, params in ranges.items()
        }
    return FamilyConfig(rule, int(mapping["n_tasks"]), sv_ranges=ranges)


def _family_to_mapping(family: FamilyConfig) -> Dict[str, Any]:
    if family.rule is FamilyRule.EXPLICIT:
        return {
            "rule": family.rule.value,
            "models": [model_to_mapping(model) for model in family.models],
        }
    if family.rule is FamilyRule.GBM_UNIFORM:
        return {
            "rule": family.rule.value,
            "n_tasks": family.n_tasks,
            "sigma_range": list(family.sigma_range),
            "mu": family.mu,
        }
    mapping: Dict[str, Any] = {"rule": family.rule.value, "n_tasks": family.n_tasks}
    if family.sv_ranges is not None:
        mapping["sv_ranges"] = {
            kind: {name: list(bounds) for name, bounds in params.items()}
            for kind, params in family.sv_ranges.items()
        }
    return mapping


def _train_from_mapping(mapping: Mapping[str, Any]) -> TrainConfig:
    defaults = TrainConfig()
    return TrainConfig(
        batch_size=int(mapping.get("batch_size", defaults.batch_size)),
        epochs=int(mapping.get("epochs", defaults.epochs)),
        lr_initial=float(mapping.get("lr_initial", defaults.lr_initial)),
        lr_final=float(mapping.get("lr_final", defaults.lr_final)),
        beta1=float(mapping.get("beta1", defaults.beta1)),
        beta2=float(mapping.get("beta2", defaults.beta2)),
        eps=float(mapping.get("eps", defaults.eps)),
        seed=int(mapping.get("seed", defaults.seed)),
    )


def _recalibration_from_mapping(mapping: Mapping[str, Any]) -> RecalibrationConfig:
    epochs = mapping.get("epochs")
    return RecalibrationConfig(
        model=model_from_mapping(_section(mapping, "model")),
        train_paths=tuple(
            int(count) for count in mapping.get("train_paths", (10, 100, 1000))
        ),
        eval_paths=int(mapping.get("eval_paths", 10000)),
        seed=int(mapping.get("seed", 0)),
        epochs=None if epochs is None else int(epochs),
    )


def _report_from_mapping(mapping: Mapping[str, Any]) -> ReportConfig:
    defaults = ReportConfig()
    low, high, n_spots = mapping.get("delta_spots", defaults.delta_spots)
    return ReportConfig(
        paths_per_task_sweep=tuple(
            int(count) for count in mapping.get("paths_per_task_sweep", ())
        ),
        histogram_bins=int(mapping.get("histogram_bins", defaults.histogram_bins)),
        histogram_range=_pair(
            mapping.get("histogram_range", defaults.histogram_range),
            "histogram_range",
        ),
        delta_tau=float(mapping.get("delta_tau", defaults.delta_tau)),
        delta_spots=(float(low), float(high), int(n_spots)),
        vol_shift=float(mapping.get("vol_shift", defaults.vol_shift)),
    )


def experiment_from_mapping(mapping: Mapping[str, Any]) -> ExperimentConfig:

    """Функция проверки словаря конфигурации по схеме версии 1.

    Args:
        mapping: разобранный JSON конфигурации.

    Returns:
        ExperimentConfig: конфигурация эксперимента.

    Raises:
        InvalidConfig: при нарушении схемы или ограничений.
        InvalidModelSpec: при невалидных параметрах модели.
    """

    if mapping.get("version") != SCHEMA_VERSION:
        raise InvalidConfig(f"Неподдерживаемая версия схемы: {mapping.get('version')}")
    try:
        grid = _section(mapping, "grid")
        claim = _section(mapping, "claim")
        arch = mapping.get("arch", {})
        recalibration = mapping.get("recalibration")
        return ExperimentConfig(
            name=str(mapping["name"]),
            family=_family_from_mapping(_section(mapping, "family")),
            grid=TimeGrid(int(grid["n_steps"]), float(grid["maturity"])),
            claim=Claim(
                float(claim["strike"]),
                Position[str(claim.get("position", "short")).upper()],
                ClaimKind(claim.get("kind", ClaimKind.EUROPEAN_CALL.value)),
            ),
            s0=float(mapping.get("s0", 1.0)),
            paths_per_task=int(mapping["paths_per_task"]),
            arch=ArchConfig(
                int(arch.get("embed_dim", 1)),
                tuple(int(width) for width in arch.get("hidden", (128, 128, 128))),
            ),
            train=_train_from_mapping(mapping.get("train", {})),
            output_dir=str(mapping.get("output_dir", "output")),
            seed=int(mapping.get("seed", 0)),
            train_fraction=float(mapping.get("train_fraction", 0.8)),
            recalibration=(
                None
                if recalibration is None
                else _recalibration_from_mapping(recalibration)
            ),
            report=_report_from_mapping(mapping.get("report", {})),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InvalidConfig(f"Конфигурация не соответствует схеме: {exc!r}") from exc


def experiment_to_mapping(experiment: ExperimentConfig) -> Dict[str, Any]:

    """Обратная к experiment_from_mapping сериализация в словарь JSON."""

    train = experiment.train
    report = experiment.report
    mapping: Dict[str, Any] = {
        "version": SCHEMA_VERSION,
        "name": experiment.name,
        "seed": experiment.seed,
        "output_dir": experiment.output_dir,
        "s0": experiment.s0,
        "paths_per_task": experiment.paths_per_task,
        "train_fraction": experiment.train_fraction,
        "grid": {
            "n_steps": experiment.grid.n_steps,
            "maturity": experiment.grid.maturity,
        },
        "claim": {
            "kind": experiment.claim.kind.value,
            "strike": experiment.claim.strike,
            "position": experiment.claim.position.name.lower(),
        },
        "family": _family_to_mapping(experiment.family),
        "arch": {
            "embed_dim": experiment.arch.embed_dim,
            "hidden": list(experiment.arch.hidden),
        },
        "train": {
            "batch_size": train.batch_size,
            "epochs": train.epochs,
            "lr_initial": train.lr_initial,
            "lr_final": train.lr_final,
            "beta1": train.beta1,
            "beta2": train.beta2,
            "eps": train.eps,
            "seed": train.seed,
        },
        "report": {
            "paths_per_task_sweep": list(report.paths_per_task_sweep),
            "histogram_bins": report.histogram_bins,
            "histogram_range": list(report.histogram_range),
            "delta_tau": report.delta_tau,
            "delta_spots": list(report.delta_spots),
            "vol_shift": report.vol_shift,
        },
    }
    if experiment.recalibration is not None:
        recalibration = experiment.recalibration
        mapping["recalibration"] = {
            "model": model_to_mapping(recalibration.model),
            "train_paths": list(recalibration.train_paths),
            "eval_paths": recalibration.eval_paths,
            "seed": recalibration.seed,
        }
        if recalibration.epochs is not None:
            mapping["recalibration"]["epochs"] = recalibration.epochs
    return mapping


def recalibration_train_config(experiment: ExperimentConfig) -> TrainConfig:

    """Гиперпараметры обучения только эмбеддинга новой задачи с id m."""

    epochs = experiment.train.epochs
    recalibration = experiment.recalibration
    if recalibration is not None and recalibration.epochs is not None:
        epochs = recalibration.epochs
    return replace(
        experiment.train,
        epochs=epochs,
        mode=TrainMode.EMBEDDING_ONLY,
        new_task_id=experiment.family.size,
    )


CONFIG = AppConfig()
CONFIG.load_config()
