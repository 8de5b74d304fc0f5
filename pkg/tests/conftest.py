from collections.abc import Callable

import numpy as np
import pytest
from numpy.typing import ArrayLike

from app.core.network import ModelParams, init_params
from app.models import DatasetKind, TimeSeriesRecord
from app.schemas import ModelConfig

# block 8, patch 4, D 8, heads 2, one encoder layer, H 4
TINY_MODEL = {
    "block_size": 8,
    "patch_size": 4,
    "model_dim": 8,
    "num_heads": 2,
    "num_encoder_layers": 1,
    "lstm_hidden": 4,
    "ffn_dim": 16,
}

RecordFactory = Callable[..., TimeSeriesRecord]


@pytest.fixture(autouse=True)
def _isolated_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    for name in (
        "FOGDETECT_SEED",
        "FOGDETECT_THREADS",
        "FOGDETECT_PRECISION",
        "FOGDETECT_THRESHOLD",
        "FOGDETECT_ENV",
        "FOGDETECT_LOG_LEVEL",
        "FOGDETECT_LOG_TIMESTAMPS",
    ):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def tiny_config() -> ModelConfig:
    return ModelConfig.build(**TINY_MODEL)


@pytest.fixture
def tiny_params(tiny_config: ModelConfig) -> ModelParams:
    return init_params(tiny_config, seed=7)


def build_record(
    length: int,
    record_id: str = "rec",
    kind: DatasetKind = DatasetKind.TDCSFOG,
    seed: int = 0,
    labels: ArrayLike | None = None,
    validity: ArrayLike | None = None,
) -> TimeSeriesRecord:
    rng = np.random.default_rng(seed)
    label_array = np.zeros((length, 3), dtype=np.int8) if labels is None else np.asarray(labels, dtype=np.int8)
    validity_array = np.ones((length, 2), dtype=np.int8) if validity is None else np.asarray(validity)
    return TimeSeriesRecord(
        id=record_id,
        kind=kind,
        time=np.arange(length, dtype=np.int64),
        acc=rng.normal(size=(length, 3)),
        labels=label_array,
        validity=validity_array,
        labeled=True,
        validity_annotated=validity is not None,
    )


@pytest.fixture
def make_record() -> RecordFactory:
    return build_record
