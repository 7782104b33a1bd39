"""
Logging setup for wealthkin

All modules log under the ``wealthkin`` root: console output at the
configured level, optional rotating run and error logs.
"""

from datetime import date
from pathlib import Path
from typing import List, Optional
import functools
import logging
import logging.handlers
import time

ROOT_LOGGER = 'wealthkin'

DETAILED_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'
CONSOLE_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def _rotating(path: Path, level: int, max_bytes: int, backup_count: int) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(
        path, maxBytes=max_bytes, backupCount=backup_count, encoding='utf-8'
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(DETAILED_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
    return handler


def file_handlers(log_dir: Path, max_bytes: int, backup_count: int) -> List[logging.Handler]:
    """Daily run log with every record plus a separate error log"""
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    stamp = date.today().strftime('%Y%m%d')
    return [
        _rotating(log_dir / f"wealthkin_{stamp}.log", logging.DEBUG, max_bytes, backup_count),
        _rotating(log_dir / f"wealthkin_errors_{stamp}.log", logging.ERROR, max_bytes, backup_count),
    ]


def setup_logging(log_level: str = "INFO",
                  log_to_file: bool = False,
                  log_to_console: bool = True,
                  log_dir: Path = Path("logs"),
                  max_bytes: int = 10 * 1024 * 1024,  # 10 MB
                  backup_count: int = 5) -> logging.Logger:
    """
    Configure the package root logger

    Replaces any handlers from an earlier call, so every CLI command starts
    from the same state.

    Args:
        log_level: Console level (DEBUG, INFO, WARNING, ERROR)
        log_to_file: Also write rotating files under log_dir
        log_to_console: Write to stderr
        log_dir: Directory for log files
        max_bytes: Size at which a log file rotates
        backup_count: Rotated files to keep

    Returns:
        The ``wealthkin`` logger
    """
    console_level = getattr(logging, log_level.upper())
    root = logging.getLogger(ROOT_LOGGER)
    root.handlers.clear()
    root.propagate = False
    # file logs capture DEBUG regardless of the console level
    root.setLevel(logging.DEBUG if log_to_file else console_level)

    if log_to_file:
        for handler in file_handlers(log_dir, max_bytes, backup_count):
            root.addHandler(handler)

    if log_to_console:
        console = logging.StreamHandler()
        console.setLevel(console_level)
        console.setFormatter(logging.Formatter(CONSOLE_FORMAT, datefmt='%H:%M:%S'))
        root.addHandler(console)

    root.debug(f"Logging initialized: level={log_level}, file={log_to_file}, console={log_to_console}")
    return root


def get_logger(name: str) -> logging.Logger:
    """Logger below the package root, e.g. get_logger('boltzmann')"""
    if name != ROOT_LOGGER and not name.startswith(ROOT_LOGGER + '.'):
        name = f"{ROOT_LOGGER}.{name}"
    return logging.getLogger(name)


class _RecordList(logging.Handler):
    def __init__(self, level: int):
        super().__init__(level)
        self.records: List[logging.LogRecord] = []

    def emit(self, record: logging.LogRecord):
        self.records.append(record)


class LogCapture:
    """Collect messages logged under a logger while the block runs"""

    def __init__(self, logger_name: str = ROOT_LOGGER, level: int = logging.INFO):
        self.logger = logging.getLogger(logger_name)
        self.level = level
        self.handler: Optional[_RecordList] = None
        self._previous_level = logging.NOTSET
        self.messages: List[str] = []

    def __enter__(self):
        self.handler = _RecordList(self.level)
        self._previous_level = self.logger.level
        if self.logger.level == logging.NOTSET or self.logger.level > self.level:
            self.logger.setLevel(self.level)
        self.logger.addHandler(self.handler)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.messages = [record.getMessage() for record in self.handler.records]
        self.logger.removeHandler(self.handler)
        self.logger.setLevel(self._previous_level)

    def get_messages(self) -> List[str]:
        return self.messages


def log_performance(func):
    """Log the wall-clock duration of a service call, or how long it ran before failing"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = get_logger(func.__module__.split('.')[-1])
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(f"{func.__name__} failed after {time.perf_counter() - start:.3f}s: {e}")
            raise
        logger.info(f"{func.__name__} completed in {time.perf_counter() - start:.3f}s")
        return result

    return wrapper
