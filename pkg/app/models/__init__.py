from .block import Block, NormalizationStats, PaddedSeries, StitchedPredictions
from .history import EpochRecord, ManifestEntry, StepRecord
from .record import (
    ACC_COLUMNS,
    EVENT_NAMES,
    LABEL_COLUMNS,
    TIME_COLUMN,
    VALIDITY_COLUMNS,
    DatasetKind,
    TimeSeriesRecord,
)

__all__ = [
    "DatasetKind",
    "TimeSeriesRecord",
    "NormalizationStats",
    "PaddedSeries",
    "Block",
    "StitchedPredictions",
    "StepRecord",
    "EpochRecord",
    "ManifestEntry",
    "TIME_COLUMN",
    "ACC_COLUMNS",
    "LABEL_COLUMNS",
    "VALIDITY_COLUMNS",
    "EVENT_NAMES",
]
