"""
Shared Configuration Module for cardkit
"""

from .settings import Settings, get_settings, override_settings, reload_settings

__all__ = ["Settings", "get_settings", "override_settings", "reload_settings"]
