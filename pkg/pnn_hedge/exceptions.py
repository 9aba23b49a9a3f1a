class InvalidModelSpec(Exception):

    """Исключение возвращаемое при нарушении ограничений параметров модели рынка.

    Attributes:
        message: объяснение ошибки.
    """

    def __init__(
        self,
        message: str = "Параметры модели рынка нарушают допустимые границы.",
    ) -> None:
        self.message = message
        super().__init__(self.message)


class InvalidConfig(Exception):

    """Исключение возвращаемое при невалидном конфигурационном файле эксперимента.

    Attributes:
        message: объяснение ошибки.
    """

    def __init__(
        self,
        message: str = (
            "Конфигурация эксперимента не прошла проверку. "
            "Проверьте config.json."
        ),
    ) -> None:
        self.message = message
        super().__init__(self.message)


class DomainError(Exception):

    """Исключение возвращаемое при вызове функции вне её области определения.

    Attributes:
        message: объяснение ошибки.
    """

    def __init__(
        self,
        message: str = "Аргумент вне области определения функции.",
    ) -> None:
        self.message = message
        super().__init__(self.message)


class DimensionMismatch(Exception):

    """Исключение возвращаемое при несогласованных размерностях массивов.

    Attributes:

    """


class EmptyData(Exception):

    """Исключение возвращаемое при пустом наборе входных данных.

    Attributes:
        message: объяснение ошибки.
    """

    def __init__(
        self,
        message: str = "Передан пустой набор данных.",
    ) -> None:
        self.message = message
        super().__init__(self.message)


class IncompatibleData(Exception):

    """Исключение возвращаемое при несовместимых наборах путей, чекпоинтах
    или архитектурах сети.

    Attributes:

    """


class NumericalFailure(Exception):

    """Исключение возвращаемое при расхождении обучения (NaN или бесконечность).

    Attributes:
        message: объяснение ошибки.
    """

    def __init__(
        self,
        message: str = "Функция потерь приняла нечисловое значение.",
    ) -> None:
        self.message = message
        super().__init__(self.message)


class OutputLocked(Exception):

    """Исключение возвращаемое если выходная директория занята другой командой.

    Attributes:
        message: объяснение ошибки.
    """

    def __init__(
        self,
        message: str = "Выходная директория заблокирована другим процессом.",
    ) -> None:
        self.message = message
        super().__init__(self.message)
