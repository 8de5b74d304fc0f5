"""
Home-collected recordings (defog): 100 Hz, g, with Valid/Task annotation in training files.
"""

from app.models import ACC_COLUMNS, LABEL_COLUMNS, TIME_COLUMN, VALIDITY_COLUMNS, DatasetKind

from .protocol import DialectColumns

STANDARD_GRAVITY = 9.81


class DefogDialect:
    """defog recordings. Valid/Task are optional (absent in inference files)."""

    @property
    def kind(self) -> DatasetKind:
        return DatasetKind.DEFOG

    @property
    def sampling_rate_hz(self) -> float:
        return 100.0

    @property
    def unit(self) -> str:
        return "g"

    @property
    def unit_scale(self) -> float:
        return STANDARD_GRAVITY

    @property
    def columns(self) -> DialectColumns:
        return DialectColumns(required=(TIME_COLUMN, *ACC_COLUMNS), labels=LABEL_COLUMNS, validity=VALIDITY_COLUMNS)
