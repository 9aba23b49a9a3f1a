import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Union

import pandas as pd

from ..config.structures import TrainLogRow, VarianceAggregate

log = logging.getLogger(__name__)

PathLike = Union[str, Path]
Row = Dict[str, Any]

TRAINING_LOG_COLUMNS = ("epoch", "learning_rate", "train_loss", "eval_loss")
PNL_STATS_COLUMNS = (
    "simulations_per_task",
    "mean",
    "std",
    "std_min",
    "std_max",
    "q01",
    "q10",
)
PER_TASK_COLUMNS = ("task_id", "mean", "std", "variance", "premium", "bs_std")
VARIANCE_COLUMNS = (
    "strategy",
    "vol_shift",
    "mean_variance",
    "median_variance",
    "max_variance",
)
HISTOGRAM_COLUMNS = ("strategy", "task_id", "bin_left", "bin_right", "count")
DELTA_SLICE_COLUMNS = ("task_id", "tau", "spot", "pnn_delta", "bs_delta")
IMPLIED_VOL_COLUMNS = ("task_id", "atm_price", "implied_vol")
RECALIBRATION_COLUMNS = ("strategy", "train_paths", "pnl_mean", "pnl_std")
RECALIBRATION_DELTA_COLUMNS = (
    "train_paths",
    "spot",
    "pnn_delta",
    "single_task_delta",
    "bs_delta",
)

OUTPUT_FILES: Mapping[str, Sequence[str]] = {
    "training_log.csv": TRAINING_LOG_COLUMNS,
    "pnl_stats.csv": PNL_STATS_COLUMNS,
    "pnl_per_task.csv": PER_TASK_COLUMNS,
    "variance_aggregate.csv": VARIANCE_COLUMNS,
    "histograms.csv": HISTOGRAM_COLUMNS,
    "delta_slices.csv": DELTA_SLICE_COLUMNS,
    "implied_vols.csv": IMPLIED_VOL_COLUMNS,
    "recalibration.csv": RECALIBRATION_COLUMNS,
    "recalibration_deltas.csv": RECALIBRATION_DELTA_COLUMNS,
}


def write_rows(
    path: PathLike,
    rows: Iterable[Mapping[str, Any]],
    columns: Optional[Sequence[str]] = None,
) -> Path:

    """Функция записи строк в CSV с заголовком.

    Args:
        path: путь файла.
        rows: строки таблицы.
        columns: порядок столбцов. По умолчанию порядок ключей первой строки.

    Returns:
        Path: путь записанного файла.
    """

    path = Path(path)
    if columns is None:
        columns = OUTPUT_FILES.get(path.name)
    frame = pd.DataFrame(list(rows), columns=None if columns is None else list(columns))
    frame.to_csv(path, index=False)
    log.info(f"Записан {path}: {len(frame)} строк")
    return path


def training_log_rows(history: Sequence[TrainLogRow]) -> Iterable[Row]:
    return (row._asdict() for row in history)


def variance_row(strategy: str, vol_shift: float, aggregate: VarianceAggregate) -> Row:
    return {"strategy": strategy, "vol_shift": vol_shift, **aggregate._asdict()}


def histogram_rows(
    strategy: str,
    task_id: int,
    edges: Sequence[float],
    counts: Sequence[int],
) -> Iterable[Row]:
    for left, right, count in zip(edges[:-1], edges[1:], counts):
        yield {
            "strategy": strategy,
            "task_id": task_id,
            "bin_left": float(left),
            "bin_right": float(right),
            "count": int(count),
        }
