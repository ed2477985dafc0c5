"""
日志配置模块 - 基于loguru的结构化日志配置

stdout 保留给命令输出，所有日志写入 stderr 或日志文件。
"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from shared.config.settings import get_settings


class LoggingConfig:
    """日志配置类"""

    def __init__(
        self,
        log_level: Optional[str] = None,
        log_format: Optional[str] = None,
        log_file: Optional[str] = None,
    ):
        settings = get_settings()
        self.log_level = (log_level or settings.log_level).upper()
        self.log_format = log_format or settings.log_format
        self.log_file = log_file if log_file is not None else settings.log_file

    def get_log_format(self, format_type: str = "console") -> str:
        """获取日志格式"""

        if format_type == "console":
            return (
                "<green>{time:HH:mm:ss.SSS}</green> | "
                "<level>{level: <8}</level> | "
                "<cyan>{extra[component]: <10}</cyan> | "
                "<level>{message}</level>"
            )
        # structured
        return (
            "{time:YYYY-MM-DD HH:mm:ss.SSS} | "
            "{level: <8} | "
            "{extra[component]: <10} | "
            "{module}:{function}:{line} | "
            "{message}"
        )


def setup_logging(
    log_level: Optional[str] = None,
    log_format: Optional[str] = None,
    log_file: Optional[str] = None,
) -> None:
    """
    设置结构化日志系统

    Args:
        log_level: 日志级别
        log_format: console 或 json
        log_file: 可选的日志文件路径
    """

    # 移除默认处理器
    logger.remove()
    logger.configure(extra={"component": "cardkit"})

    config = LoggingConfig(log_level, log_format, log_file)

    if config.log_format == "json":
        logger.add(sys.stderr, level=config.log_level, serialize=True)
    else:
        logger.add(
            sys.stderr,
            format=config.get_log_format("console"),
            level=config.log_level,
            colorize=sys.stderr.isatty(),
            backtrace=False,
            diagnose=False,
        )

    if config.log_file:
        path = Path(config.log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            path,
            format=config.get_log_format("structured"),
            level=config.log_level,
            rotation="20 MB",
            retention="7 days",
            encoding="utf-8",
        )

    logger.debug(f"日志系统初始化完成 - 级别: {config.log_level}, 格式: {config.log_format}")


def get_logger(component: str = "cardkit", **extra_fields):
    """
    获取带上下文的日志记录器

    Args:
        component: 组件名称 (solver/inference/simulator ...)
        **extra_fields: 额外的上下文字段

    Returns:
        绑定了上下文的日志记录器
    """
    return logger.bind(component=component, **extra_fields)
