"""
Command-line front end (``cardkit``).
"""

from .main import cli
