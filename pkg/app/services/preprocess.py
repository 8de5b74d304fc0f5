"""
Preprocessing: Normalization, Patching and Blocks ✂️

Turns a TimeSeriesRecord into fixed-length model inputs and back:

    normalize -> pad_series -> extract_blocks -> (model) -> stitch_predictions

---
DESIGN PRINCIPLES:
1.  Per-record statistics: each record is standardized with its own per-channel
    mean and population std; a std below NORMALIZATION_EPSILON divides by 1.
2.  Targets are reduced to patch resolution with max (any event sample marks the
    patch); the loss mask is reduced with min (a patch counts only if every sample
    in it is valid, on-task and not padding).
3.  No data is dropped: a final block always ends at the padded length, even off-stride.
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray

from app.exceptions import (
    CoverageGapError,
    InvalidStrideError,
    NotDivisibleError,
    PipelineError,
    ShapeMismatchError,
)
from app.models import Block, NormalizationStats, PaddedSeries, StitchedPredictions, TimeSeriesRecord
from app.schemas import ModelConfig

logger = logging.getLogger(__name__)

NORMALIZATION_EPSILON = 1e-8

Reduction = Literal["max", "min"]


def normalize(record: TimeSeriesRecord) -> tuple[TimeSeriesRecord, NormalizationStats]:
    """Standardize each acceleration channel; labels and validity are untouched."""
    mean = record.acc.mean(axis=0)
    std = record.acc.std(axis=0)
    divisor = np.where(std < NORMALIZATION_EPSILON, 1.0, std)
    normalized = (record.acc - mean) / divisor
    return record.replace(acc=normalized), NormalizationStats(mean=mean, std=std, divisor=divisor)


def reduce_targets(values: NDArray[Any], patch_size: int, mode: Reduction = "max") -> NDArray[Any]:
    """
    Reduce [T x C] (or [T]) to [T/patch_size x C] with max or min over each patch.

    Raises:
        NotDivisibleError: If T is not a multiple of patch_size.
    """
    array = np.asarray(values)
    length = array.shape[0]
    if patch_size < 1 or length % patch_size != 0:
        raise NotDivisibleError(length, patch_size)
    patches = array.reshape(length // patch_size, patch_size, *array.shape[1:])
    return patches.max(axis=1) if mode == "max" else patches.min(axis=1)


def pad_series(record: TimeSeriesRecord, block_size: int) -> PaddedSeries:
    """
    Append zeros (features, labels, validity) up to the next multiple of block_size.
    Padded timesteps keep stepping by one so the padded record stays well-formed.
    """
    if block_size < 1:
        raise NotDivisibleError(record.length, block_size, "block_size")
    length = record.length
    padded_length = -(-length // block_size) * block_size
    extra = padded_length - length
    padding_mask = np.concatenate([np.ones(length, dtype=np.int8), np.zeros(extra, dtype=np.int8)])
    if extra == 0:
        return PaddedSeries(record=record, padding_mask=padding_mask, original_length=length)

    time = np.concatenate([record.time, record.time[-1] + 1 + np.arange(extra, dtype=np.int64)])
    padded = record.replace(
        time=time,
        acc=np.concatenate([record.acc, np.zeros((extra, 3))]),
        labels=np.concatenate([record.labels, np.zeros((extra, 3), dtype=np.int8)]),
        validity=np.concatenate([record.validity, np.zeros((extra, 2), dtype=np.int8)]),
    )
    return PaddedSeries(record=padded, padding_mask=padding_mask, original_length=length)


def sample_weights(padded: PaddedSeries) -> NDArray[np.float64]:
    """Valid x Task x not-padding, per sample."""
    validity = padded.record.validity.astype(np.float64)
    return validity[:, 0] * validity[:, 1] * padded.padding_mask


def patch_views(
    padded: PaddedSeries, patch_size: int, start: int = 0, end: int | None = None
) -> tuple[NDArray[np.int8], NDArray[np.float64], NDArray[np.bool_]]:
    """Targets (max), mask (min) and padding flags at patch resolution over [start, end)."""
    end = padded.record.length if end is None else end
    targets = reduce_targets(padded.record.labels[start:end], patch_size, "max")
    mask = reduce_targets(sample_weights(padded)[start:end], patch_size, "min")
    flags = reduce_targets(padded.padding_mask[start:end] == 0, patch_size, "max")
    return targets, mask, flags


def block_starts(padded_length: int, block_size: int, block_stride: int) -> list[int]:
    """0, stride, 2*stride, ... plus a final start at padded_length - block_size when off-stride."""
    starts = list(range(0, padded_length - block_size + 1, block_stride))
    if starts[-1] + block_size != padded_length:
        starts.append(padded_length - block_size)
    return starts


def extract_blocks(
    padded: PaddedSeries,
    block_size: int,
    block_stride: int,
    patch_size: int,
) -> list[Block]:
    """
    Cut the padded series into overlapping blocks.

    Raises:
        InvalidStrideError: If block_stride is not in [1, block_size].
        NotDivisibleError: If the padded length is not a multiple of block_size,
            or block_size not a multiple of patch_size.
    """
    if not 1 <= block_stride <= block_size:
        raise InvalidStrideError(block_stride, block_size)
    if block_size % patch_size != 0:
        raise NotDivisibleError(block_size, patch_size, "block_size")
    padded_length = padded.record.length
    if padded_length % block_size != 0:
        raise NotDivisibleError(padded_length, block_size, "padded length")

    blocks: list[Block] = []
    for start in block_starts(padded_length, block_size, block_stride):
        end = start + block_size
        targets, mask, flags = patch_views(padded, patch_size, start, end)
        blocks.append(
            Block(
                record_id=padded.record.id,
                start=start,
                end=end,
                features=padded.record.acc[start:end],
                targets=targets,
                mask=mask,
                padded=flags,
            )
        )
    return blocks


def stitch_predictions(
    blocks: Sequence[tuple[Block, NDArray[np.floating[Any]]]],
    patch_size: int,
) -> StitchedPredictions:
    """
    Average per-patch confidences where blocks overlap. The output spans the
    padded series; padded patches are kept and flagged.

    Raises:
        CoverageGapError: If some patch of [0, T') is covered by no block.
    """
    if not blocks:
        raise CoverageGapError(0)
    record_ids = {block.record_id for block, _ in blocks}
    if len(record_ids) != 1:
        raise PipelineError(f"cannot stitch blocks of several records {sorted(record_ids)}")

    num_patches = max(block.end for block, _ in blocks) // patch_size
    total = np.zeros((num_patches, 3))
    count = np.zeros(num_patches)
    padded = np.zeros(num_patches, dtype=bool)
    for block, confidences in blocks:
        if block.start % patch_size != 0:
            raise NotDivisibleError(block.start, patch_size, "block start")
        first = block.start // patch_size
        width = (block.end - block.start) // patch_size
        conf = np.asarray(confidences, dtype=np.float64)
        if conf.shape != (width, 3):
            raise ShapeMismatchError("stitch_predictions", conf.shape, (width, 3))
        total[first : first + width] += conf
        count[first : first + width] += 1
        padded[first : first + width] |= block.padded

    uncovered = np.flatnonzero(count == 0)
    if uncovered.size:
        raise CoverageGapError(int(uncovered[0]))
    return StitchedPredictions(
        record_id=record_ids.pop(),
        confidences=total / count[:, None],
        padded=padded,
    )


def blocks_for_record(record: TimeSeriesRecord, config: ModelConfig, block_stride: int) -> list[Block]:
    normalized, _ = normalize(record)
    padded = pad_series(normalized, config.block_size)
    return extract_blocks(padded, config.block_size, block_stride, config.patch_size)


def prepare_blocks(
    records: Sequence[TimeSeriesRecord],
    config: ModelConfig,
    block_stride: int | None = None,
    drop_unmasked: bool = True,
    threads: int = 1,
) -> list[Block]:
    """normalize -> pad -> extract for every record, in record order."""
    stride = block_stride or config.block_size

    def run(record: TimeSeriesRecord) -> list[Block]:
        return blocks_for_record(record, config, stride)

    if threads > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_record = list(pool.map(run, records))
    else:
        per_record = [run(record) for record in records]

    blocks = [block for group in per_record for block in group]
    if not drop_unmasked:
        return blocks
    kept = [block for block in blocks if float(block.mask.sum()) > 0.0]
    if len(kept) < len(blocks):
        logger.debug(f"dropped {len(blocks) - len(kept)} block(s) with an all-zero mask")
    return kept
