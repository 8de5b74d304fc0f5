from pathlib import Path

import numpy as np
import pytest

from app.exceptions import ConfigInvalidError
from app.models import DatasetKind, TimeSeriesRecord
from app.repositories import load_dataset, read_synth_manifest, serialize_series
from app.schemas import SynthConfig
from app.services.synth import dominant_frequency, generate_dataset, generate_series, record_seeds, synthesize


def _onsets(record: TimeSeriesRecord) -> int:
    active = record.labels.max(axis=1).astype(np.int8)
    return int(np.sum(np.diff(np.concatenate([[0], active])) == 1))


@pytest.fixture(scope="module")
def long_series():
    return synthesize(SynthConfig.build(seed=3, duration_s=3000.0))


def test_same_seed_same_record():
    config = SynthConfig.build(seed=1)
    assert generate_series(config) == generate_series(config)
    assert generate_series(config) != generate_series(SynthConfig.build(seed=2))


def test_length_follows_sampling_rate():
    assert generate_series(SynthConfig.build(seed=0, duration_s=60.0)).length == 7680
    assert generate_series(SynthConfig.build(seed=0, duration_s=60.0, kind="defog")).length == 6000


def test_labels_match_episodes(long_series):
    record, episodes = long_series
    assert _onsets(record) == len(episodes)
    assert np.all(record.labels.sum(axis=1) <= 1)
    for episode in episodes:
        assert np.all(record.labels[episode.start : episode.end, episode.event] == 1)


def test_event_mix(long_series):
    _, episodes = long_series
    assert len(episodes) >= 200
    shares = np.bincount([e.event for e in episodes], minlength=3) / len(episodes)
    np.testing.assert_allclose(shares, [0.043, 0.798, 0.159], atol=0.05)


def test_episode_durations(long_series):
    _, episodes = long_series
    durations = np.array([e.duration_s(128.0) for e in episodes])
    assert durations.min() >= 1.0 - 1 / 128
    assert durations.max() <= 10.0 + 1 / 128
    assert np.mean(durations <= 5.0) >= 0.6


def test_spectral_signature(long_series):
    record, episodes = long_series
    vertical = record.acc[:, 0]
    inside = [dominant_frequency(vertical[e.start : e.end], 128.0) for e in episodes]
    bounds = [0, *(x for e in episodes for x in (e.start, e.end)), record.length]
    outside = [
        dominant_frequency(vertical[start:end], 128.0)
        for start, end in zip(bounds[::2], bounds[1::2], strict=True)
        if end - start >= 128
    ]

    assert np.mean([6.0 <= f <= 8.0 for f in inside]) >= 0.95
    assert np.mean([1.5 <= f <= 2.5 for f in outside]) >= 0.95
    assert np.median(inside) - np.median(outside) >= 3.0


def test_dominant_frequency_of_pure_tone():
    t = np.arange(512) / 128.0
    assert dominant_frequency(np.sin(2 * np.pi * 7.0 * t) + 3.0, 128.0) == pytest.approx(7.0, abs=1 / 16)


def test_defog_is_in_g_with_validity_columns():
    record = generate_series(SynthConfig.build(seed=4, kind="defog", duration_s=30.0))

    assert record.validity_annotated
    assert record.acc[:, 0].mean() == pytest.approx(-1.0, abs=0.05)
    assert serialize_series(record).splitlines()[0].endswith(",Valid,Task")


def test_tdcsfog_is_in_metres_per_second_squared():
    record = generate_series(SynthConfig.build(seed=4, duration_s=30.0))

    assert not record.validity_annotated
    assert record.acc[:, 0].mean() == pytest.approx(-9.81, abs=0.5)
    assert serialize_series(record).splitlines()[0].endswith(",Walking")


@pytest.mark.parametrize(
    "overrides",
    [
        {"event_mix_turn": 0.5},
        {"freeze_low_hz": 1.0},
        {"freeze_high_hz": 70.0},
        {"mean_episode_s": 20.0},
    ],
)
def test_inconsistent_config(overrides):
    with pytest.raises(ConfigInvalidError):
        SynthConfig.build(**overrides)


def test_record_seeds_are_stable():
    assert record_seeds(5, 3) == record_seeds(5, 3)
    assert record_seeds(5, 3)[:2] == record_seeds(5, 2)
    assert len(set(record_seeds(5, 3))) == 3


class TestGenerateDataset:
    def test_files_and_manifest(self, tmp_path: Path):
        entries = generate_dataset(SynthConfig.build(seed=9, duration_s=60.0), 3, tmp_path)

        records = load_dataset(tmp_path / "tdcsfog", DatasetKind.TDCSFOG)
        assert [r.id for r in records] == ["tdcsfog_0000", "tdcsfog_0001", "tdcsfog_0002"]
        assert read_synth_manifest(tmp_path / "manifest.csv") == entries
        for record, entry in zip(records, entries, strict=True):
            assert _onsets(record) == entry.n_episodes

    def test_single_record_regenerates_from_manifest(self, tmp_path: Path):
        config = SynthConfig.build(seed=9, duration_s=20.0)
        entries = generate_dataset(config, 2, tmp_path)

        again = generate_series(config.model_copy(update={"seed": entries[1].seed}), entries[1].id)

        (stored,) = [r for r in load_dataset(tmp_path / "tdcsfog", DatasetKind.TDCSFOG) if r.id == entries[1].id]
        np.testing.assert_array_equal(stored.labels, again.labels)
        np.testing.assert_allclose(stored.acc, again.acc, rtol=1e-15)

    def test_threads_write_the_same_files(self, tmp_path: Path):
        config = SynthConfig.build(seed=2, duration_s=10.0)
        generate_dataset(config, 3, tmp_path / "serial")
        generate_dataset(config, 3, tmp_path / "parallel", threads=3)
        for name in ("tdcsfog_0000.csv", "tdcsfog_0001.csv", "tdcsfog_0002.csv"):
            assert (tmp_path / "serial" / "tdcsfog" / name).read_bytes() == (
                tmp_path / "parallel" / "tdcsfog" / name
            ).read_bytes()

    def test_zero_records(self, tmp_path: Path):
        assert generate_dataset(SynthConfig.build(seed=0), 0, tmp_path) == []
        assert read_synth_manifest(tmp_path / "manifest.csv") == []

    def test_negative_count(self, tmp_path: Path):
        with pytest.raises(ConfigInvalidError):
            generate_dataset(SynthConfig.build(seed=0), -1, tmp_path)
