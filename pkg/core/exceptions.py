import argparse
from typing import Any, Callable

import structlog
from pydantic import ValidationError

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class SeparationError(Exception):
    """Базовая ошибка тулкита: код-слово, код выхода и описание."""

    code: str = 'SEPARATION_ERROR'
    exit_code: int = EXIT_DATA
    default_detail: str = 'Ошибка обработки'

    def __init__(self, detail: str | None = None):
        self.detail = detail or self.default_detail
        super().__init__(self.detail)

    def __str__(self) -> str:
        return f'{self.code}: {self.detail}'


class InvalidArgument(SeparationError):
    code = 'INVALID_ARGUMENT'
    default_detail = 'Некорректный аргумент'


class ShapeError(SeparationError):
    code = 'SHAPE_ERROR'
    default_detail = 'Несовместимые размерности'


class GeometryTooSmall(SeparationError):
    code = 'GEOMETRY_TOO_SMALL'

    def __init__(self, frame_len: int | None = None):
        msg = (
            'Длина кадра слишком мала'
            if frame_len is None
            else f'Длина кадра {frame_len} меньше минимально допустимой (4)'
        )
        super().__init__(msg)


class StateError(SeparationError):
    code = 'STATE_ERROR'
    default_detail = 'backward() вызван без предшествующего forward()'


class ModelLoadError(SeparationError):
    code = 'MODEL_LOAD_ERROR'
    default_detail = 'Не удалось загрузить модель'


class BadMagic(ModelLoadError):
    code = 'BAD_MAGIC'

    def __init__(self, magic: bytes | None = None):
        msg = (
            'Файл не является моделью SFIS'
            if magic is None
            else f'Неверная сигнатура файла модели: {magic!r}'
        )
        super().__init__(msg)


class UnsupportedVersion(ModelLoadError):
    code = 'UNSUPPORTED_VERSION'

    def __init__(self, version: int | None = None):
        msg = (
            'Неподдерживаемая версия формата'
            if version is None
            else f'Неподдерживаемая версия формата модели: {version}'
        )
        super().__init__(msg)


class TruncatedModel(ModelLoadError):
    code = 'TRUNCATED_MODEL'
    default_detail = 'Файл модели обрезан'


class UnsupportedFormat(SeparationError):
    code = 'UNSUPPORTED_FORMAT'
    default_detail = 'Неподдерживаемый формат аудио'


class WavParseError(SeparationError):
    code = 'WAV_PARSE_ERROR'
    default_detail = 'Повреждённый WAV-файл'


class MissingStems(SeparationError):
    code = 'MISSING_STEMS'
    default_detail = 'Для элемента корпуса отсутствуют дорожки'


class TrainingDiverged(SeparationError):
    code = 'TRAINING_DIVERGED'
    exit_code = EXIT_NUMERICAL

    def __init__(self, epoch: int, item: int):
        self.epoch = epoch
        self.item = item
        super().__init__(
            f'Нечисловое значение функции потерь: эпоха {epoch}, '
            f'пример {item}'
        )


class UndefinedMetric(SeparationError):
    code = 'UNDEFINED_METRIC'
    exit_code = EXIT_NUMERICAL
    default_detail = 'Метрика не определена: опорный сигнал беззвучен'


# ============================== Регистрация обработчиков =====================


def _usage_error(exc: Exception) -> tuple[int, str, Any]:
    errors = exc.errors() if isinstance(exc, ValidationError) else None
    return EXIT_USAGE, 'USAGE_ERROR', errors


def _separation_error(exc: Exception) -> tuple[int, str, Any]:
    assert isinstance(exc, SeparationError)
    return exc.exit_code, exc.code, None


def _file_error(exc: Exception) -> tuple[int, str, Any]:
    return EXIT_DATA, 'FILE_ERROR', None


def init_exception_handlers() -> list[
    tuple[type[BaseException], Callable[[Exception], tuple[int, str, Any]]]
]:
    """
    Таблица обработчиков для CLI: тип исключения → (код выхода, код-слово).
    Порядок важен: проверяется первое совпадение.
    """
    return [
        (SeparationError, _separation_error),
        (ValidationError, _usage_error),
        (argparse.ArgumentError, _usage_error),
        (OSError, _file_error),
    ]


def exit_code_for(exc: Exception) -> int:
    """
    Логирует ошибку с устойчивым кодом-словом и возвращает код выхода.
    Неожиданные исключения → 1 (INTERNAL_ERROR).
    """
    for exc_type, handler in init_exception_handlers():
        if isinstance(exc, exc_type):
            exit_code, code, errors = handler(exc)
            detail = getattr(exc, 'detail', None) or str(exc)
            if errors is not None:
                logger.error(
                    'command_failed', code=code, detail=detail, errors=errors
                )
            else:
                logger.error('command_failed', code=code, detail=detail)
            return exit_code
    logger.error(
        'command_failed',
        code='INTERNAL_ERROR',
        detail='Произошла непредвиденная ошибка',
        exc_info=exc,
    )
    return EXIT_INTERNAL
