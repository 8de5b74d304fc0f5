"""
Protocol definition for dataset dialects.
"""

from typing import NamedTuple, Protocol

from app.models import DatasetKind


class DialectColumns(NamedTuple):
    """Header policy of a dialect."""

    required: tuple[str, ...]
    labels: tuple[str, ...]
    validity: tuple[str, ...]  # empty when the dialect never annotates validity


class DatasetDialect(Protocol):
    """Properties every recording dialect exposes to ingest, synthesis and inspection."""

    @property
    def kind(self) -> DatasetKind:
        """Dataset kind this dialect parses."""
        ...

    @property
    def sampling_rate_hz(self) -> float:
        """Samples per second."""
        ...

    @property
    def unit(self) -> str:
        """Acceleration unit as written in the files."""
        ...

    @property
    def unit_scale(self) -> float:
        """Metres per second squared per file unit (divide m/s^2 by this to get file units)."""
        ...

    @property
    def columns(self) -> DialectColumns:
        """Header policy."""
        ...
