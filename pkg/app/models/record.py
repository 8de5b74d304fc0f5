"""
Accelerometer recordings as immutable value objects.
"""

from dataclasses import dataclass, replace
from enum import Enum as PyEnum
from typing import Any, Final

import numpy as np
from numpy.typing import NDArray

from app.exceptions import ShapeMismatchError

TIME_COLUMN: Final = "Time"
ACC_COLUMNS: Final = ("AccV", "AccML", "AccAP")
LABEL_COLUMNS: Final = ("StartHesitation", "Turn", "Walking")
VALIDITY_COLUMNS: Final = ("Valid", "Task")

# snake_case names of the three event classes, in LABEL_COLUMNS order
EVENT_NAMES: Final = ("start_hesitation", "turn", "walking")


class DatasetKind(str, PyEnum):
    TDCSFOG = "tdcsfog"  # lab, 128 Hz, m/s^2
    DEFOG = "defog"  # home, 100 Hz, g


def _frozen(array: NDArray[Any], dtype: type) -> NDArray[Any]:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class TimeSeriesRecord:
    """
    One recording: integer timesteps, three acceleration channels, three event
    label channels and two validity channels, all of equal length.

    `labeled` is False for inference files without label columns (labels are then
    all zero). `validity_annotated` is True only when Valid/Task came from the file;
    otherwise validity was synthesized as all ones.
    """

    id: str
    kind: DatasetKind
    time: NDArray[np.int64]
    acc: NDArray[np.float64]
    labels: NDArray[np.int8]
    validity: NDArray[np.int8]
    labeled: bool = True
    validity_annotated: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "time", _frozen(self.time, np.int64))
        object.__setattr__(self, "acc", _frozen(self.acc, np.float64))
        object.__setattr__(self, "labels", _frozen(self.labels, np.int8))
        object.__setattr__(self, "validity", _frozen(self.validity, np.int8))

        n = self.time.shape[0]
        expected = {"time": (n,), "acc": (n, 3), "labels": (n, 3), "validity": (n, 2)}
        for field, shape in expected.items():
            actual = getattr(self, field).shape
            if actual != shape:
                raise ShapeMismatchError(f"TimeSeriesRecord.{field}", shape, actual)

    @property
    def length(self) -> int:
        return int(self.time.shape[0])

    def replace(self, **changes: Any) -> "TimeSeriesRecord":
        return replace(self, **changes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeSeriesRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.kind == other.kind
            and self.labeled == other.labeled
            and self.validity_annotated == other.validity_annotated
            and np.array_equal(self.time, other.time)
            and np.array_equal(self.acc, other.acc)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.validity, other.validity)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"TimeSeriesRecord(id={self.id!r}, kind={self.kind.value}, length={self.length}, labeled={self.labeled})"
