"""
Registry for dataset dialect implementations.
"""

from app.exceptions import ConfigInvalidError
from app.models import DatasetKind

from .protocol import DatasetDialect


class DialectRegistry:
    """Registry for dataset dialect implementations, keyed by dataset kind."""

    _dialects: dict[DatasetKind, DatasetDialect] = {}

    @classmethod
    def register(cls, dialect: DatasetDialect) -> None:
        """Register a dialect instance under its kind."""
        cls._dialects[dialect.kind] = dialect

    @classmethod
    def get_dialect(cls, kind: DatasetKind | str) -> DatasetDialect:
        """Get the dialect for a kind.

        Args:
            kind: DatasetKind or its string value (e.g., 'defog')

        Raises:
            ConfigInvalidError: If the kind is unknown or has no registered dialect
        """
        known = ", ".join(k.value for k in cls._dialects)
        try:
            key = DatasetKind(kind)
        except ValueError as e:
            raise ConfigInvalidError("kind", f"unknown dataset kind '{kind}' (known: {known})") from e
        if key not in cls._dialects:
            raise ConfigInvalidError("kind", f"no dialect registered for '{key.value}' (known: {known})")
        return cls._dialects[key]
