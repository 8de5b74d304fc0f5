"""
Lab-collected recordings (tdcsfog): 128 Hz, m/s^2, no validity annotation.
"""

from app.models import ACC_COLUMNS, LABEL_COLUMNS, TIME_COLUMN, DatasetKind

from .protocol import DialectColumns


class TdcsfogDialect:
    """tdcsfog recordings. Validity is always synthesized as all ones."""

    @property
    def kind(self) -> DatasetKind:
        return DatasetKind.TDCSFOG

    @property
    def sampling_rate_hz(self) -> float:
        return 128.0

    @property
    def unit(self) -> str:
        return "m/s^2"

    @property
    def unit_scale(self) -> float:
        return 1.0

    @property
    def columns(self) -> DialectColumns:
        return DialectColumns(required=(TIME_COLUMN, *ACC_COLUMNS), labels=LABEL_COLUMNS, validity=())
