import functools
import logging
import logging.handlers
import os
import sys
import time
from contextvars import ContextVar, Token
from pathlib import Path
from typing import Optional

ROOT_LOGGER_NAME = os.getenv("APP_NAME", "ms-kernelforge")

DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
FILE_FORMAT = ('%(asctime)s - %(name)s - %(levelname)s - [RunID: %(run_id)s] - '
               '%(filename)s:%(lineno)d - %(funcName)s - %(message)s')
CONSOLE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# CLI 命令、API 任务和 HTTP 请求共用同一个追踪ID
_current_run_id: ContextVar[str] = ContextVar("run_id", default="N/A")


class ColoredFormatter(logging.Formatter):
    """控制台格式化器：级别名着色，有运行ID时带上 RunID"""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
    }
    RESET = '\033[0m'

    def format(self, record):
        colored = logging.makeLogRecord(record.__dict__)
        color = self.COLORS.get(record.levelname, '')
        colored.levelname = f"{color}{record.levelname}{self.RESET}"
        text = super().format(colored)
        run_id = getattr(record, 'run_id', 'N/A')
        if run_id != 'N/A':
            text = text.replace(f" - {colored.levelname} - ", f" - {colored.levelname} - [RunID: {run_id}] - ", 1)
        return text


class RunIdFilter(logging.Filter):
    """把当前上下文的运行ID写到日志记录上"""

    def filter(self, record):
        if not getattr(record, 'run_id', None):
            record.run_id = _current_run_id.get()
        return True


def _rotating_handler(path: Path, max_file_size: int, backup_count: int,
                      level: int = logging.NOTSET) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(path, maxBytes=max_file_size,
                                                   backupCount=backup_count, encoding='utf-8')
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
    handler.addFilter(RunIdFilter())
    return handler


def setup_logger(
    name: str = ROOT_LOGGER_NAME,
    log_level: str = "INFO",
    log_dir: Optional[Path] = None,
    max_file_size: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
    enable_console: bool = True,
    enable_file: bool = True
) -> logging.Logger:
    """
    配置应用根日志记录器

    控制台输出到 stderr（stdout 留给命令结果）；文件输出分为全量日志和只含 ERROR 以上的错误日志，
    两者都按大小轮转。

    Args:
        name: 日志记录器名称，同时用作日志文件名前缀
        log_level: 日志级别
        log_dir: 日志文件目录，默认为当前目录/logs
        max_file_size: 单个日志文件最大字节数
        backup_count: 轮转保留的备份数量
        enable_console: 是否输出到控制台
        enable_file: 是否输出到文件
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    logger.setLevel(getattr(logging, log_level.upper()))

    if enable_console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(ColoredFormatter(CONSOLE_FORMAT, datefmt=DATE_FORMAT))
        console_handler.addFilter(RunIdFilter())
        logger.addHandler(console_handler)

    if enable_file:
        log_dir = Path(log_dir or Path.cwd() / "logs")
        log_dir.mkdir(exist_ok=True, parents=True)
        logger.addHandler(_rotating_handler(log_dir / f"{name}.log", max_file_size, backup_count))
        logger.addHandler(_rotating_handler(log_dir / f"{name}_error.log", max_file_size, backup_count,
                                            level=logging.ERROR))

    logger.propagate = False
    return logger


def get_logger(name: str) -> logging.Logger:
    """模块记录器统一挂在应用根记录器下"""
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")


def log_execution_time(func):
    """装饰器：记录函数执行时间"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = get_logger(func.__module__)
        start_time = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(f"{func.__name__} 执行失败，耗时: {time.perf_counter() - start_time:.3f}s，错误: {e}")
            raise
        logger.info(f"{func.__name__} 执行完成，耗时: {time.perf_counter() - start_time:.3f}s")
        return result

    return wrapper


def set_run_id(run_id: str) -> Token:
    """设置当前上下文的运行ID，返回的 token 交给 clear_run_id 恢复外层ID"""
    return _current_run_id.set(run_id)


def clear_run_id(token: Optional[Token] = None):
    if token is not None:
        _current_run_id.reset(token)
    else:
        _current_run_id.set("N/A")


def configure_root_logger() -> logging.Logger:
    from app import config

    return setup_logger(
        name=ROOT_LOGGER_NAME,
        log_level=config.LOG_LEVEL,
        log_dir=config.LOG_DIR,
        max_file_size=config.LOG_MAX_FILE_SIZE,
        backup_count=config.LOG_BACKUP_COUNT,
        enable_console=config.LOG_ENABLE_CONSOLE,
        enable_file=config.LOG_ENABLE_FILE
    )


logger = configure_root_logger()
