"""
Synthetic Recordings 🧪

Labeled accelerometer series with the spectral signature of freezing: normal
walking oscillates at gait_freq_hz, and during an episode the dominant
oscillation moves into the freeze band with reduced forward (AccAP) motion.

---
DESIGN PRINCIPLES:
1.  Deterministic: a record is a pure function of (config, seed). Datasets derive
    one integer seed per record from the root seed, and the manifest records it,
    so any single file can be regenerated on its own.
2.  Episodes come from a renewal process: exponential gaps of walking
    (at least one second) alternate with exponential episode durations clipped
    to [min_episode_s, max_episode_s]. Episodes never touch, so every episode is
    exactly one label onset.
3.  The waveform is built in m/s^2 and converted to the dialect's unit last.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.random import SeedSequence
from numpy.typing import NDArray
from scipy.signal import periodogram

from app.core.autodiff import SeededRng
from app.core.dialects import STANDARD_GRAVITY, DialectRegistry
from app.exceptions import ConfigInvalidError
from app.models import EVENT_NAMES, ManifestEntry, TimeSeriesRecord
from app.repositories import ArtifactWriter, write_series
from app.schemas import SynthConfig

logger = logging.getLogger(__name__)

MIN_GAP_S = 1.0
HARMONIC_RATIO = 0.3
PRELUDE_S = 1.5
TURN_ARTIFACT_AMPLITUDE = 1.5

# Oscillation amplitude per channel (AccV, AccML, AccAP) in m/s^2.
WALK_AMPLITUDE = np.array([1.0, 0.5, 0.8])
FREEZE_AMPLITUDE = np.array([0.6, 0.5, 0.24])
CHANNEL_PHASE = np.array([0.0, np.pi / 2, np.pi / 4])


class Episode(NamedTuple):
    """A labeled episode over samples [start, end)."""

    start: int
    end: int
    event: int  # label channel index
    freq_hz: float

    @property
    def event_name(self) -> str:
        return EVENT_NAMES[self.event]

    def duration_s(self, sampling_rate_hz: float) -> float:
        return (self.end - self.start) / sampling_rate_hz


class SynthesizedSeries(NamedTuple):
    record: TimeSeriesRecord
    episodes: list[Episode]


def place_episodes(config: SynthConfig, rng: SeededRng, length: int) -> list[Episode]:
    fs = config.sampling_rate_hz
    duration = length / fs
    mix = np.asarray(config.event_mix)
    episodes: list[Episode] = []
    cursor = 0.0
    while True:
        start = cursor + max(MIN_GAP_S, float(rng.exponential(config.mean_gap_s)))
        span = float(np.clip(rng.exponential(config.mean_episode_s), config.min_episode_s, config.max_episode_s))
        end = min(start + span, duration)
        if end - start < config.min_episode_s:
            break
        event = rng.choice(len(EVENT_NAMES), p=mix)
        freq = float(rng.uniform(config.freeze_low_hz, config.freeze_high_hz))
        episodes.append(Episode(int(round(start * fs)), int(round(end * fs)), event, freq))
        cursor = end
    return episodes


def synthesize(config: SynthConfig, record_id: str = "synth") -> SynthesizedSeries:
    """Generate one recording together with the episodes placed in it."""
    dialect = DialectRegistry.get_dialect(config.kind)
    fs = dialect.sampling_rate_hz
    length = int(round(config.duration_s * fs))
    wave_rng, noise_rng = SeededRng(config.seed).split(2)
    episodes = place_episodes(config, wave_rng, length)

    frequency = np.full(length, config.gait_freq_hz)
    amplitude = np.tile(WALK_AMPLITUDE, (length, 1))
    labels = np.zeros((length, 3), dtype=np.int8)
    artifact = np.zeros(length)
    previous_end = 0
    for episode in episodes:
        window = slice(episode.start, episode.end)
        frequency[window] = episode.freq_hz
        amplitude[window] = FREEZE_AMPLITUDE
        labels[window, episode.event] = 1
        event = EVENT_NAMES[episode.event]
        if config.turn_artifact and event == "turn":
            span = episode.end - episode.start
            artifact[window] = TURN_ARTIFACT_AMPLITUDE * np.sin(np.pi * np.arange(span) / span)
        if config.standing_prelude and event == "start_hesitation":
            prelude_start = max(previous_end, episode.start - int(round(PRELUDE_S * fs)))
            amplitude[prelude_start : episode.start] = 0.0
        previous_end = episode.end

    # Continuous phase across frequency changes.
    phase = 2.0 * np.pi * np.cumsum(frequency) / fs
    angle = phase[:, None] + CHANNEL_PHASE[None, :]
    acc = amplitude * (np.sin(angle) + HARMONIC_RATIO * np.sin(2.0 * angle))
    acc[:, 0] -= STANDARD_GRAVITY
    acc[:, 1] += artifact
    acc += noise_rng.normal(0.0, config.noise_std, size=(length, 3))

    annotated = bool(dialect.columns.validity)
    record = TimeSeriesRecord(
        id=record_id,
        kind=config.kind,
        time=np.arange(length, dtype=np.int64),
        acc=acc / dialect.unit_scale,
        labels=labels,
        validity=np.ones((length, 2), dtype=np.int8),
        labeled=True,
        validity_annotated=annotated,
    )
    return SynthesizedSeries(record=record, episodes=episodes)


def generate_series(config: SynthConfig, record_id: str = "synth") -> TimeSeriesRecord:
    return synthesize(config, record_id).record


def record_seeds(root_seed: int, n_records: int) -> list[int]:
    """One 32-bit seed per record, spawned from the root seed."""
    return [int(child.generate_state(1)[0]) for child in SeedSequence(root_seed).spawn(n_records)]


def generate_dataset(
    config: SynthConfig,
    n_records: int,
    out_dir: Path,
    threads: int = 1,
) -> list[ManifestEntry]:
    """
    Write `n_records` recordings to `out_dir/<kind>/` and the manifest to
    `out_dir/manifest.csv`. The manifest is written even when n_records is 0.

    Raises:
        DataIOError: If a file cannot be written.
    """
    if n_records < 0:
        raise ConfigInvalidError("n", f"must be non-negative, got {n_records}")
    record_dir = out_dir / config.kind.value
    jobs = [(f"{config.kind.value}_{i:04d}", seed) for i, seed in enumerate(record_seeds(config.seed, n_records))]

    def run(job: tuple[str, int]) -> ManifestEntry:
        record_id, seed = job
        series = synthesize(config.model_copy(update={"seed": seed}), record_id)
        write_series(series.record, record_dir / f"{record_id}.csv")
        return ManifestEntry(record_id, seed, len(series.episodes), config.kind.value)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(run, jobs))
    else:
        entries = [run(job) for job in jobs]

    ArtifactWriter(out_dir).write_synth_manifest(entries)
    logger.info(f"wrote {len(entries)} synthetic {config.kind.value} recording(s) to {record_dir}")
    return entries


def dominant_frequency(signal: NDArray[np.floating], sampling_rate_hz: float, resolution_hz: float = 1 / 16) -> float:
    """
    Frequency of the periodogram peak, DC excluded. Short segments are zero-padded
    to `resolution_hz` bin spacing.
    """
    values = np.asarray(signal, dtype=np.float64)
    if values.size < 2:
        raise ValueError("need at least two samples")
    nfft = max(values.size, int(np.ceil(sampling_rate_hz / resolution_hz)))
    freqs, power = periodogram(values, fs=sampling_rate_hz, nfft=nfft, detrend="constant")
    return float(freqs[1:][np.argmax(power[1:])])
