"""
Налаштування логування
"""

import os
import sys
from contextlib import contextmanager
from typing import Optional

from loguru import logger as loguru_logger

from config import config

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<magenta>{extra[run]}</magenta> | <cyan>{name}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {extra[run]} | {thread.name} | {name}:{function}:{line} - {message}"

_configured = False


def setup_logger():
    """Налаштування логера (один раз на процес)"""
    global _configured

    if _configured:
        return loguru_logger

    loguru_logger.remove()
    loguru_logger.configure(extra={"run": "-"})

    loguru_logger.add(sys.stdout, format=CONSOLE_FORMAT, level=config.LOG_LEVEL, colorize=True)

    # Загальний журнал усіх запусків
    loguru_logger.add(
        os.path.join(config.LOG_DIR, "marlvol.log"),
        format=FILE_FORMAT,
        level=config.LOG_LEVEL,
        rotation="10 MB",
        retention="7 days"
    )

    _configured = True
    return loguru_logger


@contextmanager
def run_log(run_dir: str, name: Optional[str] = None):
    """
    Окремий run.log у каталозі запуску на час експерименту.

    Усі повідомлення всередині блоку (зокрема з потоків прогонів) позначаються іменем запуску.
    """

    name = name or os.path.basename(os.path.normpath(run_dir))
    sink_id = loguru_logger.add(
        os.path.join(run_dir, "run.log"),
        format=FILE_FORMAT,
        level="DEBUG",
        filter=lambda record: record["extra"].get("run") == name,
    )
    try:
        with loguru_logger.contextualize(run=name):
            yield loguru_logger
    finally:
        loguru_logger.remove(sink_id)
