"""
Shared Utilities Module for cardkit
"""

from .logger import LoggingConfig, get_logger, setup_logging

__all__ = [
    "LoggingConfig",
    "setup_logging",
    "get_logger",
]
