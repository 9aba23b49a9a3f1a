import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Type

import numpy as np

from .baseline import bs_hedge_pnl, hedge_vol
from .claims import mc_premium
from .config.config import AppConfig, recalibration_train_config
from .config.structures import (
    EvaluateFlags,
    ExperimentConfig,
    HedgeResult,
    NetworkArch,
    PathSet,
    StatusType,
    TrainLogRow,
)
from .evaluation import (
    atm_implied_vols,
    bs_delta_slice,
    delta_slice,
    export_embeddings,
    histogram,
    per_task_table,
    pnl_stats,
    pnl_stats_row,
    sim_count_sweep,
    variance_aggregate,
)
from .exceptions import (
    DimensionMismatch,
    DomainError,
    EmptyData,
    IncompatibleData,
    InvalidConfig,
    InvalidModelSpec,
    NumericalFailure,
    OutputLocked,
)
from .market.family import resolve_family
from .market.market_base import task_seeds
from .market.simulator import simulate
from .neural.checkpoint import load_checkpoint, save_checkpoint
from .neural.network import NetworkParams, shared_checksum
from .storage.datasets import (
    DATASET_DIR,
    export_paths_csv,
    load_datasets,
    save_datasets,
    save_paths,
    task_file_name,
)
from .storage.lock import output_lock
from .storage.reports import (
    histogram_rows,
    training_log_rows,
    variance_row,
    write_rows,
)
from .storage.response_creator import (
    FORMATTED_RESPONSE,
    JSONResponseFormatter,
    ResponseFormatter,
    ResponseTemplate,
    make_response,
)
from .training.trainer import (
    hedge_with_network,
    recalibrate,
    split_paths,
    train,
    train_single_task,
)

log = logging.getLogger(__name__)

BAD_CONFIG_ERRORS = (
    InvalidConfig,
    InvalidModelSpec,
    DomainError,
    DimensionMismatch,
    EmptyData,
    IncompatibleData,
    OutputLocked,
    OSError,
    KeyError,
    ValueError,
)

CHECKPOINT = "checkpoint.bin"
RECALIBRATED_CHECKPOINT = "checkpoint_recalibrated.bin"
NEW_TASK_DATASET = "new_task.bin"

DEEP_HEDGING = "deep_hedging"
BS_HEDGE = "bs"
Content = Dict[str, Any]


def load_experiment(
    config_path: Optional[str] = None,
    *,
    output_dir: Optional[str] = None,
    seed: Optional[int] = None,
) -> ExperimentConfig:

    """Функция загрузки и проверки конфигурации эксперимента.

    Args:
        config_path: путь к JSON. По умолчанию встроенный config.json.
        output_dir: переопределение выходной директории.
        seed: переопределение глобального зерна.

    Returns:
        ExperimentConfig: проверенная конфигурация.
    """

    app_config = AppConfig()
    if config_path is not None:
        app_config.config_path = config_path
    app_config.load_config()
    return app_config.experiment(output_dir=output_dir, seed=seed)


class Experiment:

    """Класс для запуска команд эксперимента.
    Возвращает ответы JSON строками.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        *,
        threads: int = 1,
        formatter: Type[ResponseFormatter] = JSONResponseFormatter,
    ) -> None:

        """Инициализация эксперимента.

        Args:
            config: проверенная конфигурация.
            threads: число потоков моделирования. По умолчанию 1.
            formatter: класс форматирования ответов.
        """

        log.debug(f"Инициализация эксперимента {config.name}, потоков {threads}")
        self.config = config
        self.threads = threads
        self.formatter = formatter
        self.last_status = StatusType._SUCCESS

    @property
    def output_dir(self) -> Path:
        return Path(self.config.output_dir)

    @property
    def arch(self) -> NetworkArch:
        return NetworkArch(
            self.config.family.size,
            self.config.arch.embed_dim,
            hidden=self.config.arch.hidden,
        )

    def simulate(self, *, export_csv: bool = False) -> FORMATTED_RESPONSE:

        """Моделирование траекторий всех задач и запись наборов с манифестом.

        Args:
            export_csv: дополнительно выгрузить цены задач в datasets/task_NNNN.csv.
        """

        return self._get_response(self._simulate, export_csv)

    def train(self, *, resume: bool = False) -> FORMATTED_RESPONSE:

        """Обучение сети на сохранённых наборах.

        Args:
            resume: продолжить с сохранённого чекпоинта. По умолчанию False.
        """

        return self._get_response(self._train, resume)

    def recalibrate(self) -> FORMATTED_RESPONSE:

        """Перекалибровка на новой задаче и сравнение с сетью одной задачи."""

        return self._get_response(self._recalibrate)

    def evaluate(self, flags: EvaluateFlags) -> FORMATTED_RESPONSE:

        """Запись выбранных флагами файлов оценки.

        Args:
            flags: выбор выходных файлов; пустой набор ничего не пишет.
        """

        return self._get_response(self._evaluate, flags)

    def report(self) -> FORMATTED_RESPONSE:

        """Полный прогон: моделирование, обучение, оценка, перекалибровка, сравнение."""

        return self._get_response(self._report)

    def _get_response(
        self,
        action: Callable[..., Content],
        *args: Any,
    ) -> FORMATTED_RESPONSE:
        try:
            with output_lock(self.output_dir):
                content = action(*args)
            self.last_status = StatusType._SUCCESS
            response = ResponseTemplate(StatusType._SUCCESS, content)
        except NumericalFailure as exc:
            log.exception("Обучение разошлось.")
            self.last_status = StatusType._NUMERICAL_FAILURE
            response = ResponseTemplate(self.last_status, (), str(exc))
        except BAD_CONFIG_ERRORS as exc:
            log.exception("Команда завершилась ошибкой.")
            self.last_status = StatusType._BAD_CONFIG
            response = ResponseTemplate(self.last_status, (), str(exc))
        return make_response(response, self.formatter)

    # команды

    def _simulate(self, export_csv: bool = False) -> Content:
        datasets = self._simulate_datasets(self.config)
        manifest = save_datasets(self.output_dir, datasets)
        content: Content = {"tasks": len(datasets), "manifest": manifest}
        if export_csv:
            exported = []
            for paths in datasets:
                name = task_file_name(paths.task_id, ".csv")
                target = self.output_dir / DATASET_DIR / name
                export_paths_csv(target, paths)
                exported.append(target)
            content["csv"] = exported
        return content

    def _train(self, resume: bool = False) -> Content:
        datasets = self._load_datasets()
        initial = None
        if resume:
            initial, arch = load_checkpoint(self.output_dir / CHECKPOINT)
            self._check_arch(arch)
        params, history = self._fit(self.config, datasets, initial)
        checkpoint = self.output_dir / CHECKPOINT
        save_checkpoint(checkpoint, params, self.arch)
        write_rows(self.output_dir / "training_log.csv", training_log_rows(history))
        return {
            "checkpoint": checkpoint,
            "epochs": len(history),
            "final_train_loss": history[-1].train_loss if history else None,
            "final_eval_loss": history[-1].eval_loss if history else None,
        }

    def _recalibrate(self) -> Content:
        recalibration = self.config.recalibration
        if recalibration is None:
            raise InvalidConfig("В конфигурации нет раздела recalibration.")
        params, arch = load_checkpoint(self.output_dir / CHECKPOINT)
        self._check_arch(arch)
        claim = self.config.claim
        new_id = params.n_tasks
        largest = max(recalibration.train_paths)

        paths = simulate(
            recalibration.model,
            self.config.grid,
            largest + recalibration.eval_paths,
            self.config.s0,
            recalibration.seed,
            task_id=new_id,
            threads=self.threads,
        )
        save_paths(self.output_dir / DATASET_DIR / NEW_TASK_DATASET, paths)
        held_out = paths.select(slice(largest, None))
        spots = self.config.report.spot_grid
        tau = self.config.report.delta_tau
        bs_curve = self._bs_curve(held_out, spots)
        bs_result = self._bs_result(held_out)

        config = recalibration_train_config(self.config)
        before = shared_checksum(params)
        summary, delta_rows = [], []
        recalibrated: Optional[NetworkParams] = None
        for count in recalibration.train_paths:
            subset = paths.select(slice(0, count))
            tuned, _ = recalibrate(params, subset, arch, config, claim)
            single, _ = train_single_task(subset, arch, config, claim)
            tuned_result = hedge_with_network(tuned, new_id, held_out, claim)
            single_result = hedge_with_network(single, 0, held_out, claim)
            strategies = [
                ("pnn_embedding", tuned_result),
                ("single_task", single_result),
            ]
            if bs_result is not None:
                strategies.append((BS_HEDGE, bs_result))
            for strategy, result in strategies:
                summary.append(
                    {
                        "strategy": strategy,
                        "train_paths": count,
                        "pnl_mean": float(result.pnl.mean()),
                        "pnl_std": float(result.pnl.std(ddof=1)),
                    },
                )
            _, tuned_curve = delta_slice(tuned, new_id, tau, spots, claim.strike)
            _, single_curve = delta_slice(single, 0, tau, spots, claim.strike)
            delta_rows.extend(
                {
                    "train_paths": count,
                    "spot": float(spot),
                    "pnn_delta": float(tuned_delta),
                    "single_task_delta": float(single_delta),
                    "bs_delta": float(bs_value),
                }
                for spot, tuned_delta, single_delta, bs_value in zip(
                    spots,
                    tuned_curve,
                    single_curve,
                    bs_curve,
                )
            )
            if count == largest:
                recalibrated = tuned

        if recalibrated is None or shared_checksum(recalibrated) != before:
            raise NumericalFailure("Общие веса изменились при перекалибровке.")
        checkpoint = self.output_dir / RECALIBRATED_CHECKPOINT
        save_checkpoint(checkpoint, recalibrated, replace(arch, n_tasks=new_id + 1))
        write_rows(self.output_dir / "recalibration.csv", summary)
        write_rows(self.output_dir / "recalibration_deltas.csv", delta_rows)
        return {
            "checkpoint": checkpoint,
            "new_task_id": new_id,
            "embedding": recalibrated.embedding[new_id],
            "shared_checksum": before,
        }

    def _evaluate(self, flags: EvaluateFlags) -> Content:
        if not any(flags):
            log.info("Флаги оценки не заданы, файлы не пишутся.")
            return {"files": []}
        params, arch = load_checkpoint(self.output_dir / CHECKPOINT)
        self._check_arch(arch)
        datasets = self._load_datasets()
        held_out = [self._held_out(paths) for paths in datasets]
        results = self._network_results(params, held_out)
        bs_results = self._bs_results(held_out)
        report = self.config.report
        written: List[Path] = []

        if flags.stats:
            stats = pnl_stats(results)
            row = pnl_stats_row(self.config.paths_per_task, stats)
            written.append(write_rows(self.output_dir / "pnl_stats.csv", [row]))
            written.append(
                write_rows(
                    self.output_dir / "pnl_per_task.csv",
                    per_task_table(results, bs_results),
                ),
            )
        if flags.variance or flags.baseline:
            rows = [variance_row(DEEP_HEDGING, 0.0, variance_aggregate(results))]
            if flags.baseline:
                rows.extend(self._baseline_rows(held_out))
            written.append(write_rows(self.output_dir / "variance_aggregate.csv", rows))
        if flags.histograms:
            rows = []
            for strategy, group in ((DEEP_HEDGING, results), (BS_HEDGE, bs_results)):
                for result in group:
                    edges, counts = histogram(
                        result.pnl,
                        report.histogram_bins,
                        report.histogram_range,
                    )
                    rows.extend(histogram_rows(strategy, result.task_id, edges, counts))
            written.append(write_rows(self.output_dir / "histograms.csv", rows))
        if flags.delta_slices:
            written.append(
                write_rows(
                    self.output_dir / "delta_slices.csv",
                    self._delta_slice_rows(params, held_out),
                ),
            )
        if flags.embeddings:
            models = [paths.model for paths in datasets]
            prices = [mc_premium(self.config.claim, paths) for paths in datasets]
            written.append(
                write_rows(
                    self.output_dir / "embeddings.csv",
                    export_embeddings(params, models, prices),
                ),
            )
        if flags.implied_vols:
            written.append(
                write_rows(
                    self.output_dir / "implied_vols.csv",
                    atm_implied_vols(
                        results,
                        self.config.s0,
                        self.config.claim.strike,
                        self.config.grid.maturity,
                    ),
                ),
            )
        return {"files": written}

    def _report(self) -> Content:
        content: Content = {"simulate": self._simulate(), "train": self._train()}
        content["evaluate"] = self._evaluate(EvaluateFlags.everything())
        if self.config.recalibration is not None:
            content["recalibrate"] = self._recalibrate()
        sweep = self.config.report.paths_per_task_sweep
        if sweep:
            results = self._network_results(*self._checkpoint_and_held_out())
            rows = [pnl_stats_row(self.config.paths_per_task, pnl_stats(results))]
            rows.extend(sim_count_sweep(self._sweep_results, sweep))
            rows.sort(key=lambda row: row["simulations_per_task"])
            content["sweep"] = write_rows(self.output_dir / "pnl_stats.csv", rows)
        return content

    # вспомогательные шаги

    def _simulate_datasets(self, config: ExperimentConfig) -> List[PathSet]:
        models = resolve_family(config.family, config.seed)
        seeds = task_seeds(config.seed, len(models))
        log.info(f"Моделирование {len(models)} задач по {config.paths_per_task}")
        return [
            simulate(
                model,
                config.grid,
                config.paths_per_task,
                config.s0,
                seed,
                task_id=task_id,
                threads=self.threads,
            )
            for task_id, (model, seed) in enumerate(zip(models, seeds))
        ]

    def _load_datasets(self) -> List[PathSet]:
        datasets = load_datasets(self.output_dir)
        if len(datasets) != self.config.family.size:
            raise IncompatibleData(
                f"Найдено {len(datasets)} наборов, ожидалось {self.config.family.size}",
            )
        if any(paths.grid != self.config.grid for paths in datasets):
            raise IncompatibleData("Сетка наборов не совпадает с конфигурацией.")
        return datasets

    def _check_arch(self, arch: NetworkArch) -> None:
        if arch != self.arch:
            raise IncompatibleData(f"Архитектура чекпоинта {arch} != {self.arch}")

    def _fit(
        self,
        config: ExperimentConfig,
        datasets: Sequence[PathSet],
        initial: Optional[NetworkParams] = None,
    ) -> Tuple[NetworkParams, List[TrainLogRow]]:
        parts = [split_paths(paths, config.train_fraction) for paths in datasets]
        return train(
            [train_part for train_part, _ in parts],
            self.arch,
            config.train,
            config.claim,
            [eval_part for _, eval_part in parts],
            initial,
        )

    def _held_out(self, paths: PathSet) -> PathSet:
        _, eval_part = split_paths(paths, self.config.train_fraction)
        if eval_part.n_paths < 2:
            log.warning(f"Задача {paths.task_id}: оценка на всех траекториях.")
            return paths
        return eval_part

    def _checkpoint_and_held_out(self) -> Tuple[NetworkParams, List[PathSet]]:
        params, arch = load_checkpoint(self.output_dir / CHECKPOINT)
        self._check_arch(arch)
        return params, [self._held_out(paths) for paths in self._load_datasets()]

    def _network_results(
        self,
        params: NetworkParams,
        held_out: Sequence[PathSet],
    ) -> List[HedgeResult]:
        return [
            hedge_with_network(params, paths.task_id, paths, self.config.claim)
            for paths in held_out
        ]

    def _baseline_rows(self, held_out: Sequence[PathSet]) -> List[Mapping[str, Any]]:
        shift = self.config.report.vol_shift
        rows = []
        for vol_shift in (-shift, 0.0, shift):
            results = self._bs_results(held_out, vol_shift)
            if not results:
                log.warning(f"Строка BS со сдвигом {vol_shift} пропущена: нет задач.")
                continue
            rows.append(variance_row(BS_HEDGE, vol_shift, variance_aggregate(results)))
        return rows

    def _bs_result(
        self,
        paths: PathSet,
        vol_shift: float = 0.0,
    ) -> Optional[HedgeResult]:
        try:
            return bs_hedge_pnl(paths, self.config.claim, hedge_vol(paths), vol_shift)
        except DomainError as exc:
            log.warning(f"Задача {paths.task_id}: BS-хедж пропущен: {exc}")
            return None

    def _bs_results(
        self,
        held_out: Sequence[PathSet],
        vol_shift: float = 0.0,
    ) -> List[HedgeResult]:
        results = (self._bs_result(paths, vol_shift) for paths in held_out)
        return [result for result in results if result is not None]

    def _bs_curve(self, paths: PathSet, spots: np.ndarray) -> np.ndarray:
        report = self.config.report
        strike = self.config.claim.strike
        try:
            return bs_delta_slice(hedge_vol(paths), report.delta_tau, spots, strike)
        except DomainError as exc:
            log.warning(f"Задача {paths.task_id}: срез дельт BS не построен: {exc}")
            return np.full(np.shape(spots), np.nan)

    def _delta_slice_rows(
        self,
        params: NetworkParams,
        held_out: Sequence[PathSet],
    ) -> List[Mapping[str, Any]]:
        report = self.config.report
        strike = self.config.claim.strike
        rows: List[Mapping[str, Any]] = []
        for paths in held_out:
            spots, deltas = delta_slice(
                params,
                paths.task_id,
                report.delta_tau,
                report.spot_grid,
                strike,
            )
            bs_curve = self._bs_curve(paths, spots)
            rows.extend(
                {
                    "task_id": paths.task_id,
                    "tau": report.delta_tau,
                    "spot": float(spot),
                    "pnn_delta": float(delta),
                    "bs_delta": float(bs_value),
                }
                for spot, delta, bs_value in zip(spots, deltas, bs_curve)
            )
        return rows

    def _sweep_results(self, paths_per_task: int) -> List[HedgeResult]:
        config = replace(self.config, paths_per_task=paths_per_task)
        datasets = self._simulate_datasets(config)
        params, _ = self._fit(config, datasets)
        held_out = [self._held_out(paths) for paths in datasets]
        return self._network_results(params, held_out)
