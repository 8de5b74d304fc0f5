"""
Rows of a training history and of a synthetic dataset manifest.
"""

from collections.abc import Mapping
from typing import NamedTuple


class StepRecord(NamedTuple):
    """One optimizer step."""

    step: int
    epoch: int
    lr: float
    loss: float


class EpochRecord(NamedTuple):
    """
    End-of-epoch summary. `metrics` is the flat metrics report on the held-out
    split, or None when there is no held-out split or it has no positives.
    """

    epoch: int
    mean_loss: float
    metrics: Mapping[str, float | int | None] | None


class ManifestEntry(NamedTuple):
    """One synthetic recording."""

    id: str
    seed: int
    n_episodes: int
    kind: str
