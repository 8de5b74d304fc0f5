"""
Run Artifacts 🗂️

Every file a command produces goes through ArtifactWriter, which is bound to one
output directory. Tables are written with pandas; reals use the shortest
representation that round-trips, so identical runs produce identical bytes.

Files (names relative to the output directory):
- run_manifest.json   RunManifest, written before work starts
- history.csv         step,epoch,lr,loss
- epoch_metrics.csv   epoch,mean_loss + flat metric keys (empty when undefined)
- metrics.csv         key,value
- metrics.json        flat key -> value (null when undefined)
- checkpoint.fogckpt  see app.repositories.checkpoints
- manifest.csv        synthetic dataset manifest: id,seed,n_episodes,kind
- blocks.csv          debug dump: record_id,patch_index,start_hesitation,turn,walking,mask
"""

import json
import logging
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any, Final

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from app.exceptions import DataIOError, MalformedRowError, MissingColumnError
from app.models import EVENT_NAMES, Block, EpochRecord, ManifestEntry, StepRecord
from app.schemas import MetricsReport, RunManifest

logger = logging.getLogger(__name__)

RUN_MANIFEST: Final = "run_manifest.json"
HISTORY: Final = "history.csv"
EPOCH_METRICS: Final = "epoch_metrics.csv"
METRICS_CSV: Final = "metrics.csv"
METRICS_JSON: Final = "metrics.json"
CHECKPOINT: Final = "checkpoint.fogckpt"
SYNTH_MANIFEST: Final = "manifest.csv"
BLOCK_DUMP: Final = "blocks.csv"

PREDICTION_TIME_COLUMN: Final = "patch_start_time"
PREDICTION_COLUMNS: Final = (PREDICTION_TIME_COLUMN, *EVENT_NAMES)


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"cannot write artifact: {e.strerror or e}", path=str(path)) from e
    return path


def _frame_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


def write_predictions(
    path: Path,
    patch_start_time: NDArray[np.int64],
    confidences: NDArray[np.floating[Any]],
) -> Path:
    """Per-patch confidences: patch_start_time,start_hesitation,turn,walking."""
    frame = pd.DataFrame({PREDICTION_TIME_COLUMN: np.asarray(patch_start_time, dtype=np.int64)})
    for i, name in enumerate(EVENT_NAMES):
        frame[name] = np.asarray(confidences[:, i], dtype=np.float64)
    return _write_text(path, _frame_text(frame))


def read_predictions(path: Path) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Inverse of write_predictions: (patch_start_time [N], confidences [N x 3])."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise DataIOError(f"cannot read predictions: {e.strerror or e}", path=str(path)) from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MalformedRowError(0, str(e), path=str(path)) from e
    for name in PREDICTION_COLUMNS:
        if name not in frame.columns:
            raise MissingColumnError(name, path=str(path))
    confidences = frame[list(EVENT_NAMES)].to_numpy(dtype=np.float64)
    return frame[PREDICTION_TIME_COLUMN].to_numpy(dtype=np.int64), confidences


class ArtifactWriter:
    """Writes the artifacts of one command invocation into `out_dir`."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: dict[str, str] = {}

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def _track(self, key: str, path: Path) -> Path:
        self.written[key] = path.name
        logger.debug(f"wrote {path}")
        return path

    def write_manifest(self, manifest: RunManifest) -> Path:
        return _write_text(self.path(RUN_MANIFEST), manifest.model_dump_json(indent=2) + "\n")

    def write_history(self, steps: Sequence[StepRecord]) -> Path:
        frame = pd.DataFrame(list(steps), columns=list(StepRecord._fields))
        return self._track("history", _write_text(self.path(HISTORY), _frame_text(frame)))

    def write_epoch_metrics(self, epochs: Sequence[EpochRecord]) -> Path:
        rows: list[dict[str, Any]] = []
        for record in epochs:
            row: dict[str, Any] = {"epoch": record.epoch, "mean_loss": record.mean_loss}
            metrics = record.metrics or {}
            for key in (*MetricsReport.FLAT_KEYS, "macro_f1", "skipped_classes"):
                row[key] = metrics.get(key)
            rows.append(row)
        columns = ["epoch", "mean_loss", *MetricsReport.FLAT_KEYS, "macro_f1", "skipped_classes"]
        frame = pd.DataFrame(rows, columns=columns)
        return self._track("epoch_metrics", _write_text(self.path(EPOCH_METRICS), _frame_text(frame)))

    def write_metrics(self, report: MetricsReport, prefix: str = "") -> tuple[Path, Path]:
        """Flat key-value CSV and JSON of one report."""
        flat = report.to_flat()
        frame = pd.DataFrame({"key": list(flat), "value": list(flat.values())})
        csv_path = _write_text(self.path(prefix + METRICS_CSV), _frame_text(frame))
        json_path = _write_text(self.path(prefix + METRICS_JSON), json.dumps(flat, indent=2) + "\n")
        self._track(prefix + "metrics_csv", csv_path)
        self._track(prefix + "metrics_json", json_path)
        return csv_path, json_path

    def write_synth_manifest(self, entries: Iterable[ManifestEntry]) -> Path:
        frame = pd.DataFrame(list(entries), columns=list(ManifestEntry._fields))
        return self._track("synth_manifest", _write_text(self.path(SYNTH_MANIFEST), _frame_text(frame)))

    def write_block_dump(self, blocks: Iterable[Block]) -> Path:
        """One row per patch of every block, for eyeballing targets and masks."""
        rows: list[dict[str, Any]] = []
        for block in blocks:
            for p in range(block.targets.shape[0]):
                row: dict[str, Any] = {"record_id": block.record_id, "block_start": block.start, "patch_index": p}
                for i, name in enumerate(EVENT_NAMES):
                    row[name] = int(block.targets[p, i])
                row["mask"] = float(block.mask[p])
                rows.append(row)
        columns = ["record_id", "block_start", "patch_index", *EVENT_NAMES, "mask"]
        frame = pd.DataFrame(rows, columns=columns)
        return self._track("blocks", _write_text(self.path(BLOCK_DUMP), _frame_text(frame)))

    def record(self, key: str, name: str) -> None:
        """Register an artifact written elsewhere (checkpoints, predictions)."""
        self.written[key] = name


def read_synth_manifest(path: Path) -> list[ManifestEntry]:
    try:
        frame = pd.read_csv(path, dtype={"id": str, "kind": str})
    except OSError as e:
        raise DataIOError(f"cannot read manifest: {e.strerror or e}", path=str(path)) from e
    return [
        ManifestEntry(str(row.id), int(row.seed), int(row.n_episodes), str(row.kind))
        for row in frame.itertuples(index=False)
    ]


def read_flat_metrics(path: Path) -> Mapping[str, float | int | None]:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataIOError(f"cannot read metrics: {e}", path=str(path)) from e
