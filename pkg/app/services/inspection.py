"""
Dataset statistics for `fogdetect inspect`: how many episodes of each event type,
how long they last, and where the signal energy sits inside and outside them.
"""

import logging
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from app.core.dialects import DialectRegistry
from app.models import EVENT_NAMES, TimeSeriesRecord

from .synth import dominant_frequency

logger = logging.getLogger(__name__)

HISTOGRAM_MAX_S = 10
# Segments shorter than this are too short for a meaningful spectral peak.
MIN_SPECTRAL_S = 1.0


class EpisodeRun(NamedTuple):
    """A maximal run of ones on one label channel, samples [start, end)."""

    event: int
    start: int
    end: int


class DatasetStatistics(NamedTuple):
    n_records: int
    n_samples: int
    episode_counts: dict[str, int]
    sample_fractions: dict[str, float]
    duration_histogram: list[int]  # 1 s bins up to HISTOGRAM_MAX_S, last bin open
    median_in_episode_hz: float | None
    median_out_of_episode_hz: float | None


def episode_runs(labels: NDArray[np.int8]) -> list[EpisodeRun]:
    """Runs of ones per channel, ordered by start then channel."""
    runs: list[EpisodeRun] = []
    for c in range(labels.shape[1]):
        edges = np.diff(np.concatenate([[0], labels[:, c].astype(np.int8), [0]]))
        starts = np.flatnonzero(edges == 1)
        ends = np.flatnonzero(edges == -1)
        runs.extend(EpisodeRun(c, int(s), int(e)) for s, e in zip(starts, ends, strict=True))
    return sorted(runs, key=lambda r: (r.start, r.event))


def _gaps(length: int, runs: Sequence[EpisodeRun]) -> list[tuple[int, int]]:
    gaps: list[tuple[int, int]] = []
    cursor = 0
    for run in sorted(runs, key=lambda r: r.start):
        if run.start > cursor:
            gaps.append((cursor, run.start))
        cursor = max(cursor, run.end)
    if cursor < length:
        gaps.append((cursor, length))
    return gaps


def dataset_statistics(records: Sequence[TimeSeriesRecord]) -> DatasetStatistics:
    counts = dict.fromkeys(EVENT_NAMES, 0)
    positive_samples = np.zeros(3)
    histogram = [0] * HISTOGRAM_MAX_S
    inside: list[float] = []
    outside: list[float] = []
    n_samples = 0

    for record in records:
        fs = DialectRegistry.get_dialect(record.kind).sampling_rate_hz
        n_samples += record.length
        positive_samples += record.labels.sum(axis=0)
        runs = episode_runs(record.labels)
        vertical = record.acc[:, 0]
        min_samples = int(MIN_SPECTRAL_S * fs)
        for run in runs:
            counts[EVENT_NAMES[run.event]] += 1
            seconds = (run.end - run.start) / fs
            histogram[min(int(seconds), HISTOGRAM_MAX_S - 1)] += 1
            if run.end - run.start >= min_samples:
                inside.append(dominant_frequency(vertical[run.start : run.end], fs))
        for start, end in _gaps(record.length, runs):
            if end - start >= min_samples:
                outside.append(dominant_frequency(vertical[start:end], fs))

    fractions = {
        name: float(positive_samples[i] / n_samples) if n_samples else 0.0 for i, name in enumerate(EVENT_NAMES)
    }
    return DatasetStatistics(
        n_records=len(records),
        n_samples=n_samples,
        episode_counts=counts,
        sample_fractions=fractions,
        duration_histogram=histogram,
        median_in_episode_hz=float(np.median(inside)) if inside else None,
        median_out_of_episode_hz=float(np.median(outside)) if outside else None,
    )


def _hz(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f} Hz"


def format_statistics(stats: DatasetStatistics) -> str:
    total = sum(stats.episode_counts.values())
    lines = [f"records: {stats.n_records}  samples: {stats.n_samples}  episodes: {total}", ""]
    lines.append(f"{'event':<18}{'episodes':>10}{'share':>9}{'samples':>10}")
    for name in EVENT_NAMES:
        count = stats.episode_counts[name]
        share = count / total if total else 0.0
        lines.append(f"{name:<18}{count:>10}{share:>9.1%}{stats.sample_fractions[name]:>10.2%}")
    lines.append("")
    lines.append("episode duration (s)")
    peak = max(stats.duration_histogram, default=0) or 1
    for i, count in enumerate(stats.duration_histogram):
        label = f"{i}-{i + 1}" if i < HISTOGRAM_MAX_S - 1 else f">={i}"
        bar = "#" * round(40 * count / peak)
        lines.append(f"{label:>6} {count:>6} {bar}")
    lines.append("")
    lines.append(f"median dominant frequency in episodes:  {_hz(stats.median_in_episode_hz)}")
    lines.append(f"median dominant frequency elsewhere:    {_hz(stats.median_out_of_episode_hz)}")
    return "\n".join(lines)
