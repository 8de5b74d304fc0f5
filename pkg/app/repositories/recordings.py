"""
Recording CSV Access 📄

This module reads and writes accelerometer recordings in the two dataset dialects.
Parsing is header-driven: column order in the file is irrelevant, unknown columns
are ignored, and every cell is validated before a TimeSeriesRecord is built.

---
DESIGN PRINCIPLES:
1.  Error Encapsulation: pandas parser errors, decoding errors and OSErrors are
    re-raised as DataIOError subclasses naming the file and, where known, the row.
2.  Label columns are all-or-nothing. A file without any of them is an inference
    file (labels all zero, `labeled=False`); a partial set is a MissingColumnError.
3.  Validity columns follow the dialect: defog files may carry Valid and Task
    (both or neither); tdcsfog never does, and stray Valid/Task columns there are
    ignored with a warning. Without them validity is synthesized as all ones.
4.  Directory loading sniffs each header: a file carrying Valid/Task is parsed as
    defog whatever kind was requested, so mixed directories are detectable downstream.

Row numbers in error messages are file line numbers (the header is line 1).
"""

import io
import logging
import re
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from app.core.dialects import DialectRegistry
from app.exceptions import (
    DataIOError,
    DatasetParseError,
    EmptySeriesError,
    MalformedRowError,
    MissingColumnError,
    NonMonotonicTimeError,
)
from app.models import ACC_COLUMNS, LABEL_COLUMNS, TIME_COLUMN, VALIDITY_COLUMNS, DatasetKind, TimeSeriesRecord

logger = logging.getLogger(__name__)

_INTEGER_PATTERN = r"[+-]?\d+"
_FLAG_WORDS = {"0": 0, "1": 1, "false": 0, "true": 1, "0.0": 0, "1.0": 1}
_INT64_MAX = int(np.iinfo(np.int64).max)
_INT64_MIN = int(np.iinfo(np.int64).min)


def _line(position: int) -> int:
    return position + 2


def _read_frame(csv_text: str, path: str | None) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            io.StringIO(csv_text),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError as e:
        raise EmptySeriesError(path=path) from e
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+)", str(e))
        row = int(found.group(1)) if found else 0
        raise MalformedRowError(row, f"wrong number of fields ({e})", path=path) from e
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame


def _check_arity(frame: pd.DataFrame, columns: Sequence[str], path: str | None) -> None:
    # Short rows are padded by pandas with NaN even with dtype=str.
    missing = frame[list(columns)].isna().any(axis=1).to_numpy()
    if missing.any():
        position = int(np.argmax(missing))
        raise MalformedRowError(_line(position), f"expected {frame.shape[1]} fields", path=path)


def _parse_reals(column: pd.Series, name: str, path: str | None) -> NDArray[np.float64]:
    stripped = column.str.strip()
    try:
        # exact for shortest-repr text, unlike pd.to_numeric
        values = stripped.astype(np.float64).to_numpy()
    except ValueError:
        values = pd.to_numeric(stripped, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        position = int(np.argmax(bad))
        raise MalformedRowError(_line(position), f"{name} value '{column.iloc[position]}' is not a finite number", path)
    return values


def _parse_time(column: pd.Series, path: str | None) -> NDArray[np.int64]:
    stripped = column.str.strip()
    ok = stripped.str.fullmatch(_INTEGER_PATTERN).to_numpy(dtype=bool)
    if not ok.all():
        position = int(np.argmax(~ok))
        raise MalformedRowError(_line(position), f"Time value '{column.iloc[position]}' is not an integer", path)
    try:
        time = stripped.astype(np.int64).to_numpy()
    except (ValueError, OverflowError) as e:
        position = next(i for i, text in enumerate(stripped) if not _INT64_MIN <= int(text) <= _INT64_MAX)
        raise MalformedRowError(
            _line(position), f"Time value '{column.iloc[position]}' is out of the 64-bit integer range", path
        ) from e
    steps = np.diff(time)
    broken = steps != 1
    if broken.any():
        position = int(np.argmax(broken)) + 1
        raise NonMonotonicTimeError(_line(position), int(time[position - 1]), int(time[position]), path=path)
    return time


def _parse_flags(column: pd.Series, name: str, path: str | None) -> NDArray[np.int8]:
    mapped = column.str.strip().str.lower().map(_FLAG_WORDS)
    bad = mapped.isna().to_numpy()
    if bad.any():
        position = int(np.argmax(bad))
        raise MalformedRowError(_line(position), f"{name} value '{column.iloc[position]}' is not 0 or 1", path)
    return mapped.to_numpy(dtype=np.int8)


def _present(header: Sequence[str], group: Sequence[str], path: str | None) -> bool:
    """True if every column of `group` is present, False if none is; partial sets are an error."""
    found = [name for name in group if name in header]
    if found and len(found) != len(group):
        missing = next(name for name in group if name not in header)
        raise MissingColumnError(missing, path=path)
    return bool(found)


def parse_series(csv_text: str, kind: DatasetKind, id: str, path: str | None = None) -> TimeSeriesRecord:
    """
    Parse one recording.

    Args:
        csv_text: Whole file contents, header first.
        kind: Dialect the file is written in.
        id: Record id (the file stem when loading a directory).
        path: Used in error messages only.

    Raises:
        MissingColumnError, MalformedRowError, NonMonotonicTimeError, EmptySeriesError
    """
    dialect = DialectRegistry.get_dialect(kind)
    columns = dialect.columns
    frame = _read_frame(csv_text, path)
    header = list(frame.columns)

    for name in columns.required:
        if name not in header:
            raise MissingColumnError(name, path=path)
    labeled = _present(header, LABEL_COLUMNS, path)
    has_validity = _present(header, VALIDITY_COLUMNS, path)
    if has_validity and not columns.validity:
        logger.warning(f"{path or id}: ignoring {', '.join(VALIDITY_COLUMNS)} columns in a {kind.value} file")
        has_validity = False

    known = set(columns.required) | set(LABEL_COLUMNS) | set(VALIDITY_COLUMNS)
    unknown = [name for name in header if name not in known]
    if unknown:
        logger.debug(f"{path or id}: ignoring unknown columns {unknown}")

    if frame.shape[0] == 0:
        raise EmptySeriesError(path=path)
    used = [*columns.required, *(LABEL_COLUMNS if labeled else ()), *(VALIDITY_COLUMNS if has_validity else ())]
    _check_arity(frame, used, path)

    n = frame.shape[0]
    time = _parse_time(frame[TIME_COLUMN], path)
    acc = np.column_stack([_parse_reals(frame[name], name, path) for name in ACC_COLUMNS])
    if labeled:
        labels = np.column_stack([_parse_flags(frame[name], name, path) for name in LABEL_COLUMNS])
    else:
        labels = np.zeros((n, len(LABEL_COLUMNS)), dtype=np.int8)
    if has_validity:
        validity = np.column_stack([_parse_flags(frame[name], name, path) for name in VALIDITY_COLUMNS])
    else:
        validity = np.ones((n, len(VALIDITY_COLUMNS)), dtype=np.int8)

    return TimeSeriesRecord(
        id=id,
        kind=kind,
        time=time,
        acc=acc,
        labels=labels,
        validity=validity,
        labeled=labeled,
        validity_annotated=has_validity,
    )


def serialize_series(record: TimeSeriesRecord) -> str:
    """
    Inverse of parse_series. Label columns are written only for labeled records,
    Valid/Task only for defog records whose validity came from a file (or the generator).
    Reals use the shortest representation that round-trips exactly.
    """
    data: dict[str, NDArray[np.generic]] = {TIME_COLUMN: record.time}
    for i, name in enumerate(ACC_COLUMNS):
        data[name] = record.acc[:, i]
    if record.labeled:
        for i, name in enumerate(LABEL_COLUMNS):
            data[name] = record.labels[:, i]
    if record.kind is DatasetKind.DEFOG and record.validity_annotated:
        for i, name in enumerate(VALIDITY_COLUMNS):
            data[name] = record.validity[:, i]
    return pd.DataFrame(data).to_csv(index=False, lineterminator="\n")


def sniff_kind(csv_text: str, requested: DatasetKind) -> DatasetKind:
    """The kind a file must be parsed as: defog whenever its header carries Valid and Task."""
    header = {name.strip() for name in csv_text.split("\n", 1)[0].strip().split(",")}
    if all(name in header for name in VALIDITY_COLUMNS):
        return DatasetKind.DEFOG
    return requested


def read_series(path: Path, kind: DatasetKind, sniff: bool = False) -> TimeSeriesRecord:
    """Read one recording; the record id is the file stem."""
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(f"cannot read recording: {e}", path=str(path)) from e
    file_kind = sniff_kind(text, kind) if sniff else kind
    return parse_series(text, file_kind, path.stem, path=str(path))


def write_series(record: TimeSeriesRecord, path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(serialize_series(record), encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"cannot write recording: {e.strerror or e}", path=str(path)) from e


def load_dataset(root_path: Path, kind: DatasetKind, threads: int = 1) -> list[TimeSeriesRecord]:
    """
    Load every `*.csv` directly under `root_path`, ordered by id.

    Files are parsed in parallel when `threads > 1`; ordering stays lexicographic.

    Raises:
        DataIOError: If `root_path` is not a readable directory.
        DatasetParseError: Listing every file that failed, after all files were tried.
    """
    if not root_path.is_dir():
        raise DataIOError("not a readable directory", path=str(root_path))
    try:
        files = sorted(root_path.glob("*.csv"), key=lambda p: p.stem)
    except OSError as e:
        raise DataIOError(f"cannot list directory: {e.strerror or e}", path=str(root_path)) from e

    def attempt(path: Path) -> TimeSeriesRecord | DataIOError:
        try:
            return read_series(path, kind, sniff=True)
        except DataIOError as e:
            return e

    if threads > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(attempt, files))
    else:
        outcomes = [attempt(path) for path in files]

    failures = {path.name: str(o.detail) for path, o in zip(files, outcomes, strict=True) if isinstance(o, DataIOError)}
    if failures:
        raise DatasetParseError(failures)
    records = [o for o in outcomes if isinstance(o, TimeSeriesRecord)]
    logger.debug(f"loaded {len(records)} recording(s) from {root_path}")
    return records


class RecordingRepository:
    """A directory of recordings of one dialect."""

    def __init__(self, root: Path, kind: DatasetKind):
        self.root = root
        self.kind = kind

    def path_for(self, record_id: str) -> Path:
        return self.root / f"{record_id}.csv"

    def get(self, record_id: str) -> TimeSeriesRecord:
        return read_series(self.path_for(record_id), self.kind)

    def add(self, record: TimeSeriesRecord) -> Path:
        path = self.path_for(record.id)
        write_series(record, path)
        return path

    def list(self, threads: int = 1) -> list[TimeSeriesRecord]:
        return load_dataset(self.root, self.kind, threads=threads)
