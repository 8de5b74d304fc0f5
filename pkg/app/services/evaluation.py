"""
Evaluation Service 📊

Average precision per event class, their mean, and the confusion-matrix family,
all at patch resolution.

---
DESIGN PRINCIPLES:
1.  Undefined, not zero: AP without positives, and any 0/0 ratio, is None. The
    report counts skipped classes instead of coercing them.
2.  Ranking: samples are sorted by confidence, descending. With ties="index"
    (default) equal confidences keep their original order. With ties="grouped"
    a run of equal confidences is one threshold step, so a constant ranking
    scores exactly the positive rate.
3.  Masked-out samples are removed before anything is counted or ranked.
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Literal, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.network import ModelParams, predict_block
from app.exceptions import AllUndefinedError, ConfigInvalidError, ConfigMismatchError, LengthMismatchError
from app.models import EVENT_NAMES, DatasetKind, StitchedPredictions, TimeSeriesRecord
from app.schemas import ClassMetrics, MetricsReport, ModelConfig

from .preprocess import extract_blocks, normalize, pad_series, patch_views, stitch_predictions

logger = logging.getLogger(__name__)

Ties = Literal["index", "grouped"]


class ConfusionMetrics(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float | None
    precision: float | None
    recall: float | None
    specificity: float | None
    f1: float | None

    @property
    def n_masked(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _masked(
    conf: ArrayLike, labels: ArrayLike, mask: ArrayLike | None
) -> tuple[NDArray[np.float64], NDArray[np.int8]]:
    conf_array = np.asarray(conf, dtype=np.float64).ravel()
    label_array = np.asarray(labels).ravel()
    if conf_array.shape != label_array.shape:
        raise LengthMismatchError(conf_array.size, label_array.size)
    if mask is None:
        return conf_array, label_array.astype(np.int8)
    mask_array = np.asarray(mask).ravel()
    if mask_array.shape != conf_array.shape:
        raise LengthMismatchError(conf_array.size, label_array.size, mask_array.size)
    keep = mask_array > 0
    return conf_array[keep], label_array[keep].astype(np.int8)


def average_precision(
    conf: ArrayLike,
    labels: ArrayLike,
    mask: ArrayLike | None = None,
    ties: Ties = "index",
) -> float | None:
    """
    Mean of precision@k over the ranks k of the positives, or None without positives.

    Raises:
        LengthMismatchError: If the three inputs differ in length.
    """
    scores, truth = _masked(conf, labels, mask)
    positives = int(truth.sum())
    if positives == 0:
        return None

    order = np.argsort(-scores, kind="stable")
    ranked = truth[order]
    hits = np.cumsum(ranked)
    ranks = np.arange(1, ranked.size + 1)

    if ties == "index":
        return float(np.sum((hits / ranks)[ranked == 1]) / positives)

    # Last rank of every run of equal scores.
    sorted_scores = scores[order]
    run_ends = np.flatnonzero(np.append(sorted_scores[1:] != sorted_scores[:-1], True))
    previous_hits = np.concatenate([[0], hits[run_ends[:-1]]])
    gained = hits[run_ends] - previous_hits
    precision_at_end = hits[run_ends] / ranks[run_ends]
    return float(np.sum(gained * precision_at_end) / positives)


def mean_average_precision(ap: Sequence[float | None]) -> tuple[float, int]:
    """
    Mean over the defined entries and the number of skipped (undefined) ones.

    Raises:
        AllUndefinedError: If no entry is defined.
    """
    defined = [value for value in ap if value is not None]
    if not defined:
        raise AllUndefinedError()
    return float(np.mean(defined)), len(ap) - len(defined)


def _ratio(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def metrics_from_counts(tp: int, fp: int, tn: int, fn: int) -> ConfusionMetrics:
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1: float | None = None
    if precision is not None and recall is not None:
        # P = R = 0 leaves F1 as 0/0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else None
    return ConfusionMetrics(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=_ratio(tp + tn, tp + fp + tn + fn),
        precision=precision,
        recall=recall,
        specificity=_ratio(tn, tn + fp),
        f1=f1,
    )


def check_threshold(threshold: float) -> None:
    if not 0.0 < threshold < 1.0:
        raise ConfigInvalidError("threshold", f"must be in (0, 1), got {threshold}")


def confusion_metrics(
    conf: ArrayLike,
    labels: ArrayLike,
    mask: ArrayLike | None = None,
    threshold: float = 0.5,
) -> ConfusionMetrics:
    """Binarize conf >= threshold over masked-in samples and count."""
    check_threshold(threshold)
    scores, truth = _masked(conf, labels, mask)
    predicted = scores >= threshold
    actual = truth == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    tn = int(np.sum(~predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    return metrics_from_counts(tp, fp, tn, fn)


def score_predictions(
    conf: ArrayLike,
    targets: ArrayLike,
    mask: ArrayLike,
    threshold: float = 0.5,
    ties: Ties = "index",
) -> MetricsReport:
    """
    Score [N x 3] confidences against [N x 3] binary targets under an [N] mask.

    Threshold metrics are reported per class and pooled over all three classes
    (counts summed); macro F1 is the mean of the defined per-class F1 values.

    Raises:
        LengthMismatchError: On inconsistent shapes.
        AllUndefinedError: If no class has a masked-in positive.
    """
    check_threshold(threshold)
    conf_array = np.asarray(conf, dtype=np.float64)
    target_array = np.asarray(targets)
    mask_array = np.asarray(mask, dtype=np.float64).ravel()
    if conf_array.ndim != 2 or conf_array.shape != target_array.shape or conf_array.shape[1] != len(EVENT_NAMES):
        raise LengthMismatchError(*conf_array.shape, *target_array.shape)
    if mask_array.size != conf_array.shape[0]:
        raise LengthMismatchError(conf_array.shape[0], mask_array.size)

    per_class: dict[str, ClassMetrics] = {}
    aps: list[float | None] = []
    counts = np.zeros(4, dtype=np.int64)
    f1_values: list[float] = []
    for c, name in enumerate(EVENT_NAMES):
        ap = average_precision(conf_array[:, c], target_array[:, c], mask_array, ties=ties)
        cm = confusion_metrics(conf_array[:, c], target_array[:, c], mask_array, threshold)
        aps.append(ap)
        counts += (cm.tp, cm.fp, cm.tn, cm.fn)
        if cm.f1 is not None:
            f1_values.append(cm.f1)
        per_class[name] = ClassMetrics(
            ap=ap,
            accuracy=cm.accuracy,
            precision=cm.precision,
            recall=cm.recall,
            specificity=cm.specificity,
            f1=cm.f1,
            n_positive=cm.tp + cm.fn,
            n_masked=cm.n_masked,
        )

    mean_ap, skipped = mean_average_precision(aps)
    pooled = metrics_from_counts(*(int(x) for x in counts))
    return MetricsReport(
        ap_start_hesitation=aps[0],
        ap_turn=aps[1],
        ap_walking=aps[2],
        map=mean_ap,
        skipped_classes=skipped,
        threshold=threshold,
        accuracy=pooled.accuracy,
        precision=pooled.precision,
        recall=pooled.recall,
        specificity=pooled.specificity,
        f1=pooled.f1,
        macro_f1=float(np.mean(f1_values)) if f1_values else None,
        n_masked=int(np.sum(mask_array > 0)),
        per_class=per_class,
    )


class PatchScores(NamedTuple):
    """Patch-level inputs of scoring for one record, padded patches removed."""

    record_id: str
    confidences: NDArray[np.float64]  # [N x 3]
    targets: NDArray[np.int8]  # [N x 3]
    mask: NDArray[np.float64]  # [N]


def predict_record(
    record: TimeSeriesRecord,
    params: ModelParams,
    config: ModelConfig | None = None,
) -> StitchedPredictions:
    """Eval-mode confidences for every patch of the padded record (stride = block_size)."""
    config = config or params.config
    normalized, _ = normalize(record)
    padded = pad_series(normalized, config.block_size)
    blocks = extract_blocks(padded, config.block_size, config.block_size, config.patch_size)
    return stitch_predictions([(b, predict_block(params, b.features, config)) for b in blocks], config.patch_size)


def record_patch_scores(
    record: TimeSeriesRecord,
    confidences: NDArray[Any],
    patch_size: int,
    block_size: int,
) -> PatchScores:
    """Pair stitched confidences with the record's patch targets and mask, dropping padded patches."""
    padded = pad_series(record, block_size)
    targets, mask, flags = patch_views(padded, patch_size)
    conf = np.asarray(confidences, dtype=np.float64)
    if conf.shape[0] != targets.shape[0]:
        raise LengthMismatchError(conf.shape[0], targets.shape[0])
    keep = ~flags
    return PatchScores(record.id, conf[keep], targets[keep], mask[keep])


def evaluate(
    dataset: Sequence[TimeSeriesRecord],
    params: ModelParams,
    config: ModelConfig | None = None,
    threshold: float = 0.5,
    ties: Ties = "index",
    kind: DatasetKind | None = None,
    threads: int = 1,
) -> MetricsReport:
    """
    Predict every record in eval mode and score the pooled patches.

    Records are scored in id order so ties break the same way on every run.

    Raises:
        ConfigMismatchError: If a record's kind differs from `kind`.
        AllUndefinedError: If no class has a masked-in positive.
    """
    config = config or params.config
    check_threshold(threshold)
    ordered = sorted(dataset, key=lambda r: r.id)
    if kind is not None:
        for record in ordered:
            if record.kind != kind:
                raise ConfigMismatchError("kind", kind.value, f"{record.kind.value} ({record.id})")

    def run(record: TimeSeriesRecord) -> PatchScores:
        stitched = predict_record(record, params, config)
        return record_patch_scores(record, stitched.confidences, config.patch_size, config.block_size)

    if threads > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scores = list(pool.map(run, ordered))
    else:
        scores = [run(record) for record in ordered]

    if not scores:
        raise AllUndefinedError()
    report = score_predictions(
        np.concatenate([s.confidences for s in scores]),
        np.concatenate([s.targets for s in scores]),
        np.concatenate([s.mask for s in scores]),
        threshold=threshold,
        ties=ties,
    )
    logger.debug(f"evaluated {len(scores)} record(s), {report.n_masked} masked-in patches")
    return report


def patch_start_times(record: TimeSeriesRecord, patch_size: int) -> NDArray[np.int64]:
    """Start timestep of every patch that begins inside the unpadded record."""
    count = -(-record.length // patch_size)
    return record.time[0] + patch_size * np.arange(count, dtype=np.int64)


def score_prediction_file(
    record: TimeSeriesRecord,
    times: ArrayLike,
    confidences: ArrayLike,
    config: ModelConfig,
    threshold: float = 0.5,
    ties: Ties = "index",
) -> MetricsReport:
    """
    Score confidences read back from a predictions file against the record's labels.

    Raises:
        LengthMismatchError: If the file's patch times do not match the record.
    """
    time_array = np.asarray(times, dtype=np.int64)
    expected = patch_start_times(record, config.patch_size)
    if time_array.shape != expected.shape or not np.array_equal(time_array, expected):
        raise LengthMismatchError(time_array.size, expected.size)
    padded = pad_series(record, config.block_size)
    targets, mask, flags = patch_views(padded, config.patch_size)
    count = expected.size
    keep = ~flags[:count]
    conf = np.asarray(confidences, dtype=np.float64)
    return score_predictions(conf[keep], targets[:count][keep], mask[:count][keep], threshold=threshold, ties=ties)
