"""
Dataset dialects: per-kind sampling rate, unit and header policy.
"""

from .defog import STANDARD_GRAVITY, DefogDialect
from .protocol import DatasetDialect, DialectColumns
from .registry import DialectRegistry
from .tdcsfog import TdcsfogDialect

# Both dialects are always available.
DialectRegistry.register(TdcsfogDialect())
DialectRegistry.register(DefogDialect())

__all__ = [
    "DatasetDialect",
    "DialectColumns",
    "DialectRegistry",
    "TdcsfogDialect",
    "DefogDialect",
    "STANDARD_GRAVITY",
]
