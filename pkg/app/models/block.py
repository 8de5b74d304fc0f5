"""
Value types produced by preprocessing and consumed by the network and scoring.
"""

from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .record import TimeSeriesRecord


class NormalizationStats(NamedTuple):
    """Per-channel statistics of one record's acceleration (population definition)."""

    mean: NDArray[np.float64]  # [3]
    std: NDArray[np.float64]  # [3], raw population std
    divisor: NDArray[np.float64]  # [3], std or 1.0 where std fell below epsilon


class PaddedSeries(NamedTuple):
    """A record padded at the end to a multiple of the block size."""

    record: TimeSeriesRecord
    padding_mask: NDArray[np.int8]  # [T'], 1 on original samples
    original_length: int


class Block(NamedTuple):
    """
    A fixed-length window [start, end) of a padded series, with targets, loss
    mask and padding flags already reduced to patch resolution.
    """

    record_id: str
    start: int
    end: int
    features: NDArray[np.float64]  # [block_size x 3]
    targets: NDArray[np.int8]  # [P x 3], max over each patch
    mask: NDArray[np.float64]  # [P], min over each patch of Valid*Task*not-padding
    padded: NDArray[np.bool_]  # [P], True if the patch holds any padding sample


class StitchedPredictions(NamedTuple):
    """Per-patch confidences over a whole padded series."""

    record_id: str
    confidences: NDArray[np.float64]  # [T'/patch_size x 3]
    padded: NDArray[np.bool_]  # [T'/patch_size]
