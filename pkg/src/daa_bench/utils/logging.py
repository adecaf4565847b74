"""Logging setup: stdlib loggers rendered through rich on stderr."""

from __future__ import annotations

import logging

from rich.console import Console
from rich.logging import RichHandler

_HANDLER_NAME = "daa_bench"


def configure_logging(level: str | int = "WARNING") -> None:
    """Attach a single rich handler to the package logger."""
    logger = logging.getLogger("daa_bench")
    logger.setLevel(level.upper() if isinstance(level, str) else level)
    if any(handler.get_name() == _HANDLER_NAME for handler in logger.handlers):
        return
    handler = RichHandler(
        console=Console(stderr=True), show_path=False, rich_tracebacks=True
    )
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
