"""Бинарный формат чекпоинта сети.

Раскладка файла:
    8 байт   магическая строка b"PNNCKPT1"
    uint32   версия формата (little-endian)
    uint32   длина заголовка в байтах
    JSON     заголовок UTF-8: архитектура сети
    float64  тензоры little-endian в порядке объявления:
             embedding, W1, b1, ..., Wk, bk (row-major)
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from ..config.structures import NetworkArch
from ..exceptions import IncompatibleData, InvalidConfig
from .network import NetworkParams, check_arch

log = logging.getLogger(__name__)

MAGIC = b"PNNCKPT1"
VERSION = 1
_PREFIX = struct.Struct("<II")


def arch_to_mapping(arch: NetworkArch) -> Dict[str, Any]:
    return {
        "n_tasks": arch.n_tasks,
        "embed_dim": arch.embed_dim,
        "n_features": arch.n_features,
        "hidden": list(arch.hidden),
        "activation": arch.activation,
    }


def arch_from_mapping(mapping: Dict[str, Any]) -> NetworkArch:
    try:
        return NetworkArch(
            n_tasks=int(mapping["n_tasks"]),
            embed_dim=int(mapping["embed_dim"]),
            n_features=int(mapping["n_features"]),
            hidden=tuple(int(width) for width in mapping["hidden"]),
            activation=str(mapping["activation"]),
        )
    except (KeyError, TypeError, ValueError, InvalidConfig) as exc:
        raise IncompatibleData("Заголовок чекпоинта повреждён.") from exc


def _shapes(arch: NetworkArch) -> List[Tuple[int, ...]]:
    sizes = arch.layer_sizes
    shapes: List[Tuple[int, ...]] = [(arch.n_tasks, arch.embed_dim)]
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        shapes.extend(((fan_in, fan_out), (fan_out,)))
    return shapes


def dumps_checkpoint(params: NetworkParams, arch: NetworkArch) -> bytes:

    """Сериализация параметров сети в байты чекпоинта."""

    check_arch(params, arch)
    header = json.dumps(arch_to_mapping(arch), sort_keys=True).encode("utf-8")
    chunks = [MAGIC, _PREFIX.pack(VERSION, len(header)), header]
    chunks.extend(
        np.ascontiguousarray(tensor, dtype="<f8").tobytes()
        for tensor in params.tensors()
    )
    return b"".join(chunks)


def loads_checkpoint(data: bytes) -> Tuple[NetworkParams, NetworkArch]:

    """Десериализация чекпоинта, побитово обратная dumps_checkpoint.

    Raises:
        IncompatibleData: при неверной сигнатуре, версии или длине.
    """

    if data[: len(MAGIC)] != MAGIC:
        raise IncompatibleData("Файл не является чекпоинтом сети.")
    offset = len(MAGIC)
    try:
        version, header_length = _PREFIX.unpack_from(data, offset)
    except struct.error as exc:
        raise IncompatibleData("Чекпоинт обрезан.") from exc
    if version != VERSION:
        raise IncompatibleData(f"Неподдерживаемая версия чекпоинта: {version}")
    offset += _PREFIX.size
    try:
        header = json.loads(data[offset : offset + header_length].decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise IncompatibleData("Заголовок чекпоинта повреждён.") from exc
    arch = arch_from_mapping(header)
    offset += header_length

    shapes = _shapes(arch)
    expected = offset + 8 * sum(int(np.prod(shape)) for shape in shapes)
    if len(data) != expected:
        raise IncompatibleData(
            f"Размер чекпоинта {len(data)} байт, ожидалось {expected}",
        )
    tensors = []
    for shape in shapes:
        count = int(np.prod(shape))
        tensor = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        tensors.append(tensor.astype(np.float64).reshape(shape))
        offset += 8 * count
    return NetworkParams.from_tensors(tensors), arch


def save_checkpoint(
    path: Union[str, Path],
    params: NetworkParams,
    arch: NetworkArch,
) -> None:
    Path(path).write_bytes(dumps_checkpoint(params, arch))
    log.info(f"Чекпоинт сохранён: {path}")


def load_checkpoint(path: Union[str, Path]) -> Tuple[NetworkParams, NetworkArch]:

    """Загрузка чекпоинта.

    Raises:
        IncompatibleData: если файл отсутствует или повреждён.
    """

    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IncompatibleData(f"Не удалось прочитать чекпоинт: {path}") from exc
    log.debug(f"Загрузка чекпоинта: {path}")
    return loads_checkpoint(data)
