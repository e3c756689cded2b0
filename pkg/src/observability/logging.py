"""JSON log lines on stderr for pricing runs.

Events carry their numbers as fields, e.g.

    logger.info("LBA price computed", price=7.37, strike=100.0, k_max=9)
    logger.warning("Poisson truncation leaves tail mass", tail_mass=3.1e-9, k_max=9)

so a batch run can be filtered by method, strike or table afterwards.
"""

import logging
import sys
from typing import Any

from pythonjsonlogger import jsonlogger

from src.config import get_settings


class StructuredLogger:
    """Keyword-field logger shared by the pricers, the harness, the CLI and the service."""

    def __init__(self, name: str = "basket-lba", level: str = "INFO"):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, level.upper(), logging.INFO))

        self.logger.handlers.clear()
        self.logger.propagate = False

        # stdout is reserved for reports
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(jsonlogger.JsonFormatter(
            fmt="%(asctime)s %(name)s %(levelname)s %(message)s",
            rename_fields={"asctime": "timestamp", "levelname": "severity", "name": "logger"},
        ))
        self.logger.addHandler(handler)

    def set_level(self, level: str) -> None:
        """Applied by `--log-level`; DEBUG adds quadrature and partition details."""
        self.logger.setLevel(getattr(logging, level.upper(), logging.INFO))

    def info(self, message: str, **fields: Any) -> None:
        """Prices, table progress, service start and stop."""
        self.logger.info(message, extra=fields)

    def error(self, message: str, **fields: Any) -> None:
        """A method or request failed; callers pass error and error_type."""
        self.logger.error(message, extra=fields)

    def warning(self, message: str, **fields: Any) -> None:
        """Numerics that ran but deserve a look: floored variance, non-monotone layers, heavy Poisson tails."""
        self.logger.warning(message, extra=fields)

    def debug(self, message: str, **fields: Any) -> None:
        self.logger.debug(message, extra=fields)


logger = StructuredLogger(level=get_settings().log_level)
