import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Union

from ..exceptions import OutputLocked

log = logging.getLogger(__name__)

LOCK_NAME = ".pnn_hedge.lock"


@contextmanager
def output_lock(directory: Union[str, Path]) -> Iterator[Path]:

    """Контекстный менеджер блокировки выходной директории на время команды.

    Файл блокировки создаётся атомарно и удаляется при выходе.

    Args:
        directory: выходная директория, создаётся при отсутствии.

    Yields:
        Path: директория.

    Raises:
        OutputLocked: если директория уже заблокирована.
    """

    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    lock_path = root / LOCK_NAME
    try:
        descriptor = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as exc:
        raise OutputLocked(f"Директория {root} заблокирована: {lock_path}") from exc
    try:
        os.write(descriptor, str(os.getpid()).encode("ascii"))
    finally:
        os.close(descriptor)
    log.debug(f"Установлена блокировка {lock_path}")
    try:
        yield root
    finally:
        lock_path.unlink(missing_ok=True)
        log.debug(f"Снята блокировка {lock_path}")
