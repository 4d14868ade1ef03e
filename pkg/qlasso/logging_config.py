# -*- coding: utf-8 -*-
"""
Конфигурация логирования qlasso.
Консоль с цветными уровнями и ротируемый файл для долгих симуляций.
"""

from datetime import datetime
from typing import Optional, TextIO
import logging
import logging.handlers
import os
import sys

from .exceptions import ValidationError

LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')
DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class ColoredFormatter(logging.Formatter):
    """
    Форматтер с цветным выводом уровня для терминала.
    """

    COLORS = {
        'DEBUG': '\033[36m',     # Cyan
        'INFO': '\033[32m',      # Green
        'WARNING': '\033[33m',   # Yellow
        'ERROR': '\033[31m',     # Red
        'CRITICAL': '\033[35m',  # Magenta
        'RESET': '\033[0m'
    }

    def __init__(self, fmt: Optional[str] = None, stream: Optional[TextIO] = None):
        super().__init__(fmt)
        self.stream = stream if stream is not None else sys.stderr

    def format(self, record):
        """Форматирует запись; цвет только для TTY, запись не изменяется."""
        isatty = getattr(self.stream, 'isatty', None)
        if not (isatty and isatty()) or record.levelname not in self.COLORS:
            return super().format(record)
        colored = logging.makeLogRecord(record.__dict__)
        colored.levelname = f"{self.COLORS[record.levelname]}{record.levelname}{self.COLORS['RESET']}"
        return super().format(colored)


def resolve_level(log_level: str) -> int:
    """Преобразует имя уровня в числовое значение logging."""
    name = str(log_level).upper()
    if name not in LEVELS:
        raise ValidationError(f"Неизвестный уровень логирования: {log_level}. Доступные: {list(LEVELS)}")
    return getattr(logging, name)


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[str] = None,
    log_dir: str = "logs",
    console_output: bool = True,
    file_output: bool = False,
    max_bytes: int = 10 * 1024 * 1024,  # 10 MB
    backup_count: int = 5,
    format_string: Optional[str] = None
) -> logging.Logger:
    """
    Настраивает логирование процесса (корневой логгер).

    Args:
        log_level: Уровень (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Имя файла лога (по умолчанию qlasso_YYYYMMDD.log)
        log_dir: Директория для логов
        console_output: Выводить логи в stderr
        file_output: Сохранять логи в ротируемый файл
        max_bytes: Максимальный размер файла лога
        backup_count: Количество резервных копий
        format_string: Формат строки лога

    Returns:
        Настроенный корневой логгер

    Examples:
        >>> logger = setup_logging(log_level="DEBUG")
        >>> logger.info("Система логирования настроена")
    """
    level = resolve_level(log_level)

    if log_file is None:
        log_file = f"qlasso_{datetime.now().strftime('%Y%m%d')}.log"
    if format_string is None:
        format_string = DEFAULT_FORMAT

    logger = logging.getLogger()
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # stdout занят JSON-выводом CLI, поэтому консольный лог идет в stderr
    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(ColoredFormatter(format_string, stream=sys.stderr))
        logger.addHandler(console_handler)

    if file_output:
        os.makedirs(log_dir, exist_ok=True)
        file_path = os.path.join(log_dir, log_file)
        file_handler = logging.handlers.RotatingFileHandler(
            file_path,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(format_string))
        logger.addHandler(file_handler)

    logger.debug(f"Логирование настроено: уровень {log_level.upper()}")
    if file_output:
        logger.debug(f"Файл лога: {os.path.join(log_dir, log_file)}")

    return logger


def get_logger(name: str) -> logging.Logger:
    """
    Получает логгер для модуля.

    Examples:
        >>> logger = get_logger(__name__)
    """
    return logging.getLogger(name)


class LogContext:
    """
    Контекстный менеджер для временного изменения уровня логирования.

    Использование:
        with LogContext(logging.WARNING):
            run_scenario(config)   # подробности репликаций скрыты
    """

    def __init__(self, level: int, logger: Optional[logging.Logger] = None):
        self.level = level
        self.logger = logger or logging.getLogger()
        self.old_level: Optional[int] = None

    def __enter__(self):
        self.old_level = self.logger.level
        self.logger.setLevel(self.level)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.logger.setLevel(self.old_level)


class PerformanceLogger:
    """
    Логирование длительности операций (решение задачи, перебор знаков,
    прогон сценария).

    Использование:
        with PerformanceLogger("Константа совместимости", logger):
            compatibility_constant(design, S)
    """

    def __init__(self, operation_name: str, logger: Optional[logging.Logger] = None):
        self.operation_name = operation_name
        self.logger = logger or logging.getLogger()
        self.start_time: Optional[datetime] = None
        self.duration: Optional[float] = None

    def start(self):
        self.start_time = datetime.now()
        self.logger.debug(f"Начало операции: {self.operation_name}")

    def stop(self) -> Optional[float]:
        """Останавливает отсчет, логирует и возвращает длительность в секундах."""
        if self.start_time is None:
            self.logger.warning(f"Операция {self.operation_name} не была начата")
            return None
        self.duration = (datetime.now() - self.start_time).total_seconds()
        self.logger.info(f"Операция '{self.operation_name}' завершена за {self.duration:.3f} сек")
        self.start_time = None
        return self.duration

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()
