"""Logging bootstrap for the command line."""

import logging
from typing import Optional

from rich.logging import RichHandler

from .config import Config


def setup_logging(level: Optional[str] = None) -> None:
    """Install a rich handler on the root logger"""
    logging.basicConfig(
        level=(level or Config.LOG_LEVEL).upper(),
        format="%(name)s: %(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )
