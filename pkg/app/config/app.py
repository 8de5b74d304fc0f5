"""
Application Configuration 🌐

This module defines process-wide defaults read from the environment. They seed
the run configuration; values from a config file or command-line flag win.
"""

import os

from app.exceptions import ConfigError

_PRECISIONS = ("float64", "float32")


def _int_env(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got '{raw}'") from e
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


# --- EXECUTION ---


def get_threads() -> int:
    """
    Get the worker thread count for the parallel paths (directory loading,
    data-parallel gradients, record-level evaluation).

    Returns:
        Thread count (default: 1, the deterministic single-threaded reference path).
    """
    return _int_env("FOGDETECT_THREADS", 1, minimum=1)


def get_default_seed() -> int:
    """Get the default RNG seed (FOGDETECT_SEED, default 0)."""
    return _int_env("FOGDETECT_SEED", 0, minimum=0)


def get_precision() -> str:
    """
    Get the floating-point precision of the training loop.

    Returns:
        "float64" (default) or "float32".

    Raises:
        ConfigError: If FOGDETECT_PRECISION names anything else.
    """
    value = os.getenv("FOGDETECT_PRECISION", "float64").strip().lower()
    if value not in _PRECISIONS:
        raise ConfigError(f"FOGDETECT_PRECISION must be one of {_PRECISIONS}, got '{value}'")
    return value


# --- SCORING ---


def get_default_threshold() -> float:
    """Get the decision threshold for confusion metrics (FOGDETECT_THRESHOLD, default 0.5)."""
    raw = os.getenv("FOGDETECT_THRESHOLD", "0.5")
    try:
        value = float(raw)
    except ValueError as e:
        raise ConfigError(f"FOGDETECT_THRESHOLD must be a number, got '{raw}'") from e
    if not 0.0 < value < 1.0:
        raise ConfigError(f"FOGDETECT_THRESHOLD must be in (0, 1), got {value}")
    return value
