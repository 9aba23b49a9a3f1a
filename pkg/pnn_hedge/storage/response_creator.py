import json
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import PurePath
from typing import Any, Iterable, Mapping, NamedTuple, Type, Union

import numpy as np

from ..config.structures import StatusType

FORMATTED_RESPONSE = str


class ResponseTemplate(NamedTuple):

    """Класс данных для хранения результата команды.

    Attributes:
        status: состояние ответа
        content: содержание ответа
    """

    status: StatusType
    content: Union[Iterable, Mapping]
    description: str = ""


class ResponseFormatter:

    """Интерфейс для любых классов создания ответа.

    Attributes:
        FORMATTED_RESPONSE: форматированный ответ.
    """

    @classmethod
    def make(cls, api_response: ResponseTemplate) -> FORMATTED_RESPONSE:

        """Метод, который вызывается для формирования ответа.

        Args:
            api_response (ResponseTemplate): сырой ответ команды.

        Raises:
            NotImplementedError: не реализован.

        Returns:
            FORMATTED_RESPONSE: форматированный ответ.
        """
        raise NotImplementedError


class JSONResponseFormatter(ResponseFormatter):

    """Класс для создания ответов команд в формате JSON"""

    @classmethod
    def make(cls, api_response: ResponseTemplate) -> FORMATTED_RESPONSE:

        """Метод для форматирования ответа.

        Args:
            api_response: сырой ответ команды,
            который требуется отформатировать.

        Returns:
            FORMATTED_RESPONSE: отформатированный ответ.

        """

        dict_for_json = {
            "status_code": api_response.status.code,
            "status_message": api_response.status.message,
            "description": api_response.description or api_response.status.description,
            "content": api_response.content,
        }
        json_string = json.dumps(
            dict_for_json,
            sort_keys=False,
            ensure_ascii=False,
            separators=(",", ": "),
            cls=EnhancedJSONEncoder,
        )
        return json_string


class EnhancedJSONEncoder(json.JSONEncoder):
    def default(self, encoding_object: Any) -> Any:
        if is_dataclass(encoding_object) and not isinstance(encoding_object, type):
            return asdict(encoding_object)
        if isinstance(encoding_object, np.generic):
            return encoding_object.item()
        if isinstance(encoding_object, np.ndarray):
            return encoding_object.tolist()
        if isinstance(encoding_object, PurePath):
            return str(encoding_object)
        if isinstance(encoding_object, Enum):
            return encoding_object.value
        return super().default(encoding_object)


def make_response(
    api_response: ResponseTemplate,
    formatter: Type[ResponseFormatter],
) -> FORMATTED_RESPONSE:

    """Функция форматирования ответа.

    Args:
        api_response: шаблонный ответ команды
        formatter: класс для форматирования ответа.

    Returns:
        ResponseFormatter.FORMATTED_RESPONSE: форматированный ответ.

    """

    return formatter.make(api_response)
