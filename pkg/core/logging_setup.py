import logging
import sys

import structlog

from settings.settings import settings


def configure_logging(
    level: str | int | None = None, fmt: str | None = None
) -> None:
    """
    Настраивает structlog: JSON (или консольный вывод) в stderr.
    Машинные результаты пишутся только в файлы, stderr только для диагностики.
    """
    if level is None:
        level = settings.log_level_no
    elif isinstance(level, str):
        level = logging.getLevelName(level.upper())
    fmt = fmt or settings.LOG_FORMAT

    logging.basicConfig(
        format='%(message)s',
        level=level,
        stream=sys.stderr,
    )

    renderer = (
        structlog.dev.ConsoleRenderer(colors=False)
        if fmt == 'console'
        else structlog.processors.JSONRenderer()
    )
    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt='iso'),
            structlog.processors.add_log_level,
            structlog.processors.dict_tracebacks,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


configure_logging()

logger = structlog.get_logger()
