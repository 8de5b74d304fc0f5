"""
Configuration Initialization and Loading 🛠️

This module serves as the entry point for the application's configuration.
It manages loading environment variables from .env files, setting up logging,
and re-exporting the configuration getters and run-config helpers for clean access.
"""

import os
from logging import Logger, getLogger
from pathlib import Path

from dotenv import dotenv_values

# Import settings helpers from sub-modules
from .app import get_default_seed, get_default_threshold, get_precision, get_threads
from .log import setup_logging
from .settings import SETTING_KEYS, RunSettings, load_settings, parse_settings, render_settings, resolve_settings

# Module-level logger (used before or during main app logging setup)
logger: Logger = getLogger(__name__)


def _env_files(project_root: Path) -> list[Path]:
    """Candidate .env files, lowest priority first."""
    candidates = [project_root / ".env", Path.cwd() / ".env"]
    env_name = os.getenv("FOGDETECT_ENV")
    if env_name:
        candidates.append(project_root / f".env.{env_name}")
    unique = list(dict.fromkeys(path.resolve() for path in candidates))
    return [path for path in unique if path.is_file()]


def load_env_files(project_root: Path | None = None) -> dict[str, Path]:
    """
    Load variables such as FOGDETECT_SEED or LOG_LEVEL from .env files, then configure logging.

    This function should be called once at process startup.

    Priority order (later sources override earlier ones):
    1. Base .env file from the project root, then one in the working directory
    2. Environment-specific .env.{FOGDETECT_ENV} file from the project root
    3. Shell environment variables (always highest priority)

    Args:
        project_root: Path to project root directory. If None, auto-detects.

    Returns:
        Every variable taken from a file, mapped to the file that supplied it.
    """
    if project_root is None:
        # Auto-detect project root (2 levels up from app/config/__init__.py)
        project_root = Path(__file__).parent.parent.parent

    shell = set(os.environ)
    loaded: dict[str, Path] = {}
    for env_file in _env_files(project_root):
        for key, value in dotenv_values(env_file).items():
            if key in shell or value is None:
                continue
            os.environ[key] = value
            loaded[key] = env_file

    # Configure logging after .env files are loaded (so LOG_LEVEL is available)
    setup_logging()

    logger.debug(f"Environment: {os.getenv('FOGDETECT_ENV') or '(not set)'}")
    for key in sorted(name for name in os.environ if name.startswith("FOGDETECT_")):
        source = loaded[key].name if key in loaded else "shell"
        logger.debug(f"{key}={os.environ[key]} ({source})")
    return loaded


# --- Re-export all necessary configuration getters for simple consumption ---

__all__ = [
    # Initialization
    "load_env_files",
    "setup_logging",
    # Environment defaults
    "get_threads",
    "get_default_seed",
    "get_precision",
    "get_default_threshold",
    # Run configuration files
    "SETTING_KEYS",
    "RunSettings",
    "parse_settings",
    "load_settings",
    "resolve_settings",
    "render_settings",
]
