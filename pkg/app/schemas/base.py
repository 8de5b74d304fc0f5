"""
Shared base for configuration schemas built from flat run settings.
"""

from collections.abc import Mapping
from typing import Any, Self

from pydantic import BaseModel, ConfigDict, ValidationError

from app.exceptions import ConfigInvalidError


class SettingsModel(BaseModel):
    """
    Frozen pydantic model that can be built from the flat string settings of a
    run configuration. Validation failures surface as ConfigInvalidError naming the key.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", protected_namespaces=())

    @classmethod
    def build(cls, **values: Any) -> Self:
        """Validate keyword values, translating pydantic errors into ConfigInvalidError."""
        try:
            return cls(**values)
        except ValidationError as e:
            first = e.errors()[0]
            key = ".".join(str(part) for part in first["loc"]) or cls.__name__
            raise ConfigInvalidError(key, first["msg"]) from e

    @classmethod
    def from_settings(cls, settings: Mapping[str, str]) -> Self:
        """Pick the keys this schema owns out of the resolved run settings and validate them."""
        values = {key: value for key, value in settings.items() if key in cls.model_fields}
        return cls.build(**values)

    def to_settings(self) -> dict[str, str]:
        """Flat string form, omitting unset optional values."""
        rendered: dict[str, str] = {}
        for key, value in self.model_dump(mode="json").items():
            if value is None:
                continue
            rendered[key] = str(value).lower() if isinstance(value, bool) else str(value)
        return rendered
