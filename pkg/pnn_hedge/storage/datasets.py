"""Хранение смоделированных траекторий.

Раскладка файла набора:
    8 байт   магическая строка b"PNNPATH1"
    uint32   версия формата (little-endian)
    uint32   длина заголовка в байтах
    JSON     заголовок UTF-8: task_id, seed, размеры, сетка, модель
    float64  матрица цен [n_paths x (n_steps + 1)] little-endian, row-major
    float64  матрица дисперсии того же размера, если has_variance
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from ..config.config import model_from_mapping, model_to_mapping
from ..config.structures import PathSet, TimeGrid
from ..exceptions import IncompatibleData, InvalidConfig, InvalidModelSpec

log = logging.getLogger(__name__)

MAGIC = b"PNNPATH1"
VERSION = 1
_PREFIX = struct.Struct("<II")

DATASET_DIR = "datasets"
MANIFEST = "manifest.csv"
MANIFEST_COLUMNS = ("task_id", "file", "kind", "params", "seed", "n_paths")

PathLike = Union[str, Path]


def task_file_name(task_id: int, suffix: str = ".bin") -> str:
    return f"task_{task_id:04d}{suffix}"


def _header(paths: PathSet) -> Dict[str, Any]:
    return {
        "task_id": paths.task_id,
        "seed": paths.seed,
        "n_paths": paths.n_paths,
        "n_steps": paths.grid.n_steps,
        "maturity": paths.grid.maturity,
        "model": model_to_mapping(paths.model),
        "has_variance": paths.variance is not None,
    }


def dumps_paths(paths: PathSet) -> bytes:

    """Сериализация набора траекторий в байты."""

    header = json.dumps(_header(paths), sort_keys=True).encode("utf-8")
    chunks = [MAGIC, _PREFIX.pack(VERSION, len(header)), header]
    chunks.append(np.ascontiguousarray(paths.spot, dtype="<f8").tobytes())
    if paths.variance is not None:
        chunks.append(np.ascontiguousarray(paths.variance, dtype="<f8").tobytes())
    return b"".join(chunks)


def loads_paths(data: bytes) -> PathSet:

    """Десериализация набора траекторий.

    Raises:
        IncompatibleData: при неверной сигнатуре, версии, длине или заголовке.
    """

    if data[: len(MAGIC)] != MAGIC:
        raise IncompatibleData("Файл не является набором траекторий.")
    offset = len(MAGIC)
    try:
        version, header_length = _PREFIX.unpack_from(data, offset)
    except struct.error as exc:
        raise IncompatibleData("Набор траекторий обрезан.") from exc
    if version != VERSION:
        raise IncompatibleData(f"Неподдерживаемая версия набора: {version}")
    offset += _PREFIX.size
    try:
        header = json.loads(data[offset : offset + header_length].decode("utf-8"))
        grid = TimeGrid(int(header["n_steps"]), float(header["maturity"]))
        model = model_from_mapping(header["model"])
        n_paths = int(header["n_paths"])
    except (UnicodeDecodeError, ValueError, KeyError, InvalidConfig) as exc:
        raise IncompatibleData("Заголовок набора траекторий повреждён.") from exc
    except InvalidModelSpec as exc:
        raise IncompatibleData("Модель в заголовке набора невалидна.") from exc
    offset += header_length

    shape = (n_paths, grid.n_steps + 1)
    n_matrices = 2 if header.get("has_variance") else 1
    expected = offset + 8 * n_matrices * shape[0] * shape[1]
    if len(data) != expected:
        raise IncompatibleData(f"Размер набора {len(data)} байт, ожидалось {expected}")
    matrices = []
    for _ in range(n_matrices):
        count = shape[0] * shape[1]
        matrix = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        matrices.append(matrix.astype(np.float64).reshape(shape))
        offset += 8 * count
    variance = matrices[1] if n_matrices == 2 else None
    return PathSet(
        int(header["task_id"]),
        matrices[0],
        variance,
        int(header["seed"]),
        grid,
        model,
    )


def save_paths(path: PathLike, paths: PathSet) -> None:
    Path(path).write_bytes(dumps_paths(paths))
    log.debug(f"Набор задачи {paths.task_id} сохранён: {path}")


def load_paths(path: PathLike) -> PathSet:

    """Загрузка набора траекторий.

    Raises:
        IncompatibleData: если файл отсутствует или повреждён.
    """

    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IncompatibleData(f"Не удалось прочитать набор: {path}") from exc
    return loads_paths(data)


def export_paths_csv(path: PathLike, paths: PathSet) -> None:

    """Отладочная выгрузка матрицы цен: строка на траекторию, столбец на дату."""

    columns = [f"t_{k}" for k in range(paths.grid.n_steps + 1)]
    pd.DataFrame(paths.spot, columns=columns).to_csv(path, index=False)


def manifest_rows(datasets: Sequence[PathSet]) -> List[Dict[str, Any]]:
    rows = []
    for paths in datasets:
        descriptor = model_to_mapping(paths.model)
        kind = descriptor.pop("kind")
        rows.append(
            {
                "task_id": paths.task_id,
                "file": f"{DATASET_DIR}/{task_file_name(paths.task_id)}",
                "kind": kind,
                "params": json.dumps(descriptor, sort_keys=True),
                "seed": paths.seed,
                "n_paths": paths.n_paths,
            },
        )
    return rows


def save_datasets(directory: PathLike, datasets: Sequence[PathSet]) -> Path:

    """Функция сохранения наборов задач и манифеста.

    Args:
        directory: выходная директория эксперимента.
        datasets: наборы траекторий задач.

    Returns:
        Path: путь к манифесту.
    """

    root = Path(directory)
    (root / DATASET_DIR).mkdir(parents=True, exist_ok=True)
    for paths in datasets:
        save_paths(root / DATASET_DIR / task_file_name(paths.task_id), paths)
    manifest = root / MANIFEST
    frame = pd.DataFrame(manifest_rows(datasets), columns=list(MANIFEST_COLUMNS))
    frame.to_csv(manifest, index=False)
    log.info(f"Сохранено {len(datasets)} наборов траекторий в {root}")
    return manifest


def load_datasets(directory: PathLike) -> List[PathSet]:

    """Функция загрузки наборов задач по манифесту в порядке task_id.

    Raises:
        IncompatibleData: если манифест или набор отсутствует или не согласован.
    """

    root = Path(directory)
    try:
        # зёрна 64-битные без знака, читаются текстом
        frame = pd.read_csv(
            root / MANIFEST,
            dtype={"file": str, "params": str, "seed": str},
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise IncompatibleData(f"Не удалось прочитать манифест в {root}") from exc
    if frame.empty:
        raise IncompatibleData(f"Манифест в {root} пуст.")
    datasets = []
    for row in frame.sort_values("task_id").itertuples(index=False):
        paths = load_paths(root / str(row.file))
        if paths.task_id != int(row.task_id) or paths.seed != int(row.seed):
            raise IncompatibleData(f"Набор {row.file} не совпадает с манифестом.")
        datasets.append(paths)
    log.debug(f"Загружено {len(datasets)} наборов траекторий из {root}")
    return datasets
