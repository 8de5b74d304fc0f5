"""
Exception Registry and Public Interface 🗃️

This module serves as the public interface for the application's custom exceptions,
re-exporting classes defined in sub-modules like 'base', 'data' and 'model'.

This allows consuming modules to import all necessary exceptions from a single, clean path:
    from app.exceptions import MissingColumnError, ZeroMaskError

The structure groups exceptions by their area of concern (exit category, data, model).
"""

# Import all exceptions from domain-specific modules for centralized access.
from .base import (
    CompatibilityError,
    ConfigError,
    DataIOError,
    FogDetectError,
    PipelineError,
)
from .data import (
    CoverageGapError,
    DatasetParseError,
    EmptySeriesError,
    InvalidStrideError,
    MalformedRowError,
    MissingColumnError,
    NonMonotonicTimeError,
    NotDivisibleError,
)
from .model import (
    AllUndefinedError,
    CheckpointFormatError,
    ConfigInvalidError,
    ConfigMismatchError,
    EmptyDatasetError,
    LengthMismatchError,
    MixedDatasetKindError,
    NonFiniteGradientError,
    RateOutOfRangeError,
    ShapeMismatchError,
    ZeroMaskError,
)

__all__ = [
    # Categories (by exit code)
    "FogDetectError",  # 1
    "ConfigError",  # 2
    "DataIOError",  # 3
    "PipelineError",  # 4
    "CompatibilityError",  # 5
    # Recordings and blocks
    "MissingColumnError",
    "MalformedRowError",
    "NonMonotonicTimeError",
    "EmptySeriesError",
    "DatasetParseError",
    "NotDivisibleError",
    "InvalidStrideError",
    "CoverageGapError",
    # Numeric core, training, scoring
    "ShapeMismatchError",
    "LengthMismatchError",
    "RateOutOfRangeError",
    "ConfigInvalidError",
    "ZeroMaskError",
    "NonFiniteGradientError",
    "MixedDatasetKindError",
    "EmptyDatasetError",
    "AllUndefinedError",
    "ConfigMismatchError",
    "CheckpointFormatError",
]
