from .artifacts import (
    BLOCK_DUMP,
    CHECKPOINT,
    EPOCH_METRICS,
    HISTORY,
    METRICS_CSV,
    METRICS_JSON,
    RUN_MANIFEST,
    SYNTH_MANIFEST,
    ArtifactWriter,
    read_flat_metrics,
    read_predictions,
    read_synth_manifest,
    write_predictions,
)
from .checkpoints import Checkpoint, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .recordings import (
    RecordingRepository,
    load_dataset,
    parse_series,
    read_series,
    serialize_series,
    sniff_kind,
    write_series,
)

__all__ = [
    "RecordingRepository",
    "parse_series",
    "serialize_series",
    "read_series",
    "write_series",
    "load_dataset",
    "sniff_kind",
    "Checkpoint",
    "encode_checkpoint",
    "decode_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "ArtifactWriter",
    "write_predictions",
    "read_predictions",
    "read_synth_manifest",
    "read_flat_metrics",
    "RUN_MANIFEST",
    "HISTORY",
    "EPOCH_METRICS",
    "METRICS_CSV",
    "METRICS_JSON",
    "CHECKPOINT",
    "SYNTH_MANIFEST",
    "BLOCK_DUMP",
]
