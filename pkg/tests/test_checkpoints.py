from pathlib import Path

import numpy as np
import pytest

from app.exceptions import CheckpointFormatError, DataIOError
from app.models import DatasetKind
from app.repositories import (
    ArtifactWriter,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    read_flat_metrics,
    read_predictions,
    save_checkpoint,
    write_predictions,
)
from app.schemas import MetricsReport


def test_encoding_is_byte_deterministic(tiny_params):
    assert encode_checkpoint(tiny_params, 7, DatasetKind.TDCSFOG) == encode_checkpoint(
        tiny_params.copy(), 7, DatasetKind.TDCSFOG
    )


@pytest.mark.parametrize("dtype", [np.float64, np.float32])
def test_save_and_load(tmp_path: Path, tiny_params, dtype):
    params = tiny_params.astype(dtype)
    save_checkpoint(tmp_path / "model.fogckpt", params, 7, DatasetKind.DEFOG)

    loaded = load_checkpoint(tmp_path / "model.fogckpt")

    assert loaded.seed == 7
    assert loaded.kind is DatasetKind.DEFOG
    assert loaded.params.config == params.config
    assert loaded.params.dtype == dtype
    for name in params:
        np.testing.assert_array_equal(loaded.params[name], params[name])


def test_bad_magic():
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(b"PK\x03\x04 not ours")


def test_truncated_data(tiny_params):
    blob = encode_checkpoint(tiny_params, 0, DatasetKind.TDCSFOG)
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(blob[:-8])


def test_missing_file(tmp_path: Path):
    with pytest.raises(DataIOError):
        load_checkpoint(tmp_path / "none.fogckpt")


def test_predictions_file(tmp_path: Path):
    conf = np.array([[0.1, 0.2, 0.30000000000000004], [0.4, 0.5, 1 / 3]])
    write_predictions(tmp_path / "p.csv", np.array([0, 18]), conf)

    times, read_back = read_predictions(tmp_path / "p.csv")

    np.testing.assert_array_equal(times, [0, 18])
    np.testing.assert_array_equal(read_back, conf)


def test_metrics_json_keeps_undefined_as_null(tmp_path: Path):
    report = MetricsReport(ap_start_hesitation=None, ap_turn=0.8, ap_walking=0.6, map=0.7, skipped_classes=1)
    _, json_path = ArtifactWriter(tmp_path).write_metrics(report)

    flat = read_flat_metrics(json_path)

    assert flat["ap_start_hesitation"] is None
    assert flat["map"] == 0.7
    assert set(MetricsReport.FLAT_KEYS) <= set(flat)
