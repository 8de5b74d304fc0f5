"""
Logging Configuration Setup 🪵

Configures Python's logging for the command-line tool from environment variables,
with an optional explicit level from the `--log-level` flag.
"""

import logging
import os
from collections.abc import Mapping

# Logging level mapping
log_levels: Mapping[str, int] = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}

APP_LOGGERS = ("fogdetect", "app")
HANDLER_NAME = "fogdetect-stderr"
_PLAIN_FORMAT = "%(levelname)-4s:     %(message)s"
_TIMED_FORMAT = "%(asctime)s %(levelname)-4s: %(message)s"


def _truthy(value: str | None) -> bool:
    return value is not None and value.strip().lower() in ("1", "true", "yes", "on")


def app_handler(logger: logging.Logger) -> logging.Handler | None:
    """The stream handler installed by setup_logging, if any. Other handlers (e.g. test capture) are left alone."""
    return next((h for h in logger.handlers if h.get_name() == HANDLER_NAME), None)


def setup_logging(app_level: str | None = None) -> None:
    """
    Configure logging from environment variables.

    Uses these environment variables:
    - LOG_LEVEL: Controls root Python logging (all libraries). Default: WARNING
    - FOGDETECT_LOG_LEVEL: Controls only application logging. Default: INFO, so that
      training progress lines reach standard error.
    - FOGDETECT_LOG_TIMESTAMPS: Prefix application lines with the wall-clock time
      (useful for long training runs). Default: off

    Args:
        app_level: Overrides FOGDETECT_LOG_LEVEL when given (e.g. from --log-level).

    Safe to call more than once: the handler installed by an earlier call is
    re-levelled and re-formatted instead of duplicated.
    """
    # 1. Determine Log Levels

    root_level_str = os.getenv("LOG_LEVEL", "WARNING").upper()
    root_log_level = log_levels.get(root_level_str, logging.WARNING)

    app_level_str = (app_level or os.getenv("FOGDETECT_LOG_LEVEL", "INFO")).upper()
    app_log_level = log_levels.get(app_level_str, logging.INFO)
    formatter = logging.Formatter(_TIMED_FORMAT if _truthy(os.getenv("FOGDETECT_LOG_TIMESTAMPS")) else _PLAIN_FORMAT)

    # 2. Configure Root Logger

    logging.basicConfig(
        level=root_log_level,
        format="%(message)s",
    )

    # 3. Configure Application Loggers

    for logger_name in APP_LOGGERS:
        app_logger = logging.getLogger(logger_name)
        app_logger.setLevel(app_log_level)
        app_logger.propagate = False  # Stop propagation to root to prevent duplicates

        handler = app_handler(app_logger)
        if handler is None:
            handler = logging.StreamHandler()  # standard error
            handler.set_name(HANDLER_NAME)
            app_logger.addHandler(handler)
        handler.setLevel(app_log_level)
        handler.setFormatter(formatter)

    # 4. Silence Noisy Third-Party Loggers

    # numexpr announces its thread count when pandas imports it
    logging.getLogger("numexpr").setLevel(logging.WARNING)
    logging.getLogger("numexpr.utils").setLevel(logging.WARNING)
