"""
Training Service 🏋️

Masked binary cross-entropy, the warm-up learning-rate schedule, Adam and the
training loop that ties them to preprocessing and the network.

---
DESIGN PRINCIPLES:
1.  One tape per block. A batch's loss is the sum of its blocks' losses, each
    normalized by the batch's total mask, so the batch loss is the masked mean
    over every patch and class of the batch.
2.  Determinism: initialization uses the run seed; shuffling and dropout draw from
    child streams split off the same seed. Parallel gradient evaluation keeps block
    order when summing, so it reproduces the single-threaded result exactly.
3.  Errors raised inside the loop carry the global step index.
"""

import logging
import math
from collections.abc import Callable, Iterator, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.autodiff import SeededRng, Tape, Value
from app.core.network import ModelParams, forward, init_params
from app.exceptions import (
    ConfigInvalidError,
    EmptyDatasetError,
    FogDetectError,
    MixedDatasetKindError,
    NonFiniteGradientError,
    PipelineError,
    ShapeMismatchError,
    ZeroMaskError,
)
from app.models import Block, EpochRecord, StepRecord, TimeSeriesRecord
from app.schemas import MetricsReport, ModelConfig, TrainRunConfig

from .evaluation import evaluate
from .preprocess import prepare_blocks

logger = logging.getLogger(__name__)

Tensor = NDArray[np.floating[Any]]


# --- 1. LOSS ---


def masked_bce_loss(
    tape: Tape,
    pred: Value,
    target: ArrayLike,
    mask: ArrayLike,
    loss_eps: float = 1e-7,
    mask_floor: float = 1.0,
    normalizer: float | None = None,
) -> Value:
    """
    sum(BCE * mask_tiled) / sum(mask_tiled), predictions clipped to [eps, 1 - eps].

    Args:
        pred: Confidences [..., C] on `tape`.
        target: Binary targets, same shape as `pred`.
        mask: Weights shaped like `pred` without the class axis (tiled across
            classes), or exactly like `pred`.
        normalizer: Divide by this instead of the local mask total (used when a
            batch is split over several tapes); the floor check is then the caller's.

    Raises:
        ShapeMismatchError: If target or mask do not fit `pred`.
        ZeroMaskError: If the local mask total is below `mask_floor`.
    """
    target_array = np.asarray(target, dtype=tape.dtype)
    mask_array = np.asarray(mask, dtype=tape.dtype)
    if target_array.shape != pred.shape:
        raise ShapeMismatchError("masked_bce_loss", pred.shape, target_array.shape)
    if mask_array.shape == pred.shape[:-1]:
        mask_array = np.broadcast_to(mask_array[..., None], pred.shape)
    elif mask_array.shape != pred.shape:
        raise ShapeMismatchError("masked_bce_loss", pred.shape, mask_array.shape)

    if normalizer is None:
        normalizer = float(mask_array.sum())
        if normalizer < mask_floor:
            raise ZeroMaskError(normalizer, mask_floor)

    p = tape.clip(pred, loss_eps, 1.0 - loss_eps)
    positive = tape.mul(tape.constant(target_array), tape.log(p))
    negative = tape.mul(tape.constant(1.0 - target_array), tape.log(tape.affine(p, -1.0, 1.0)))
    weighted = tape.mul(tape.add(positive, negative), tape.constant(np.ascontiguousarray(mask_array)))
    return tape.scale(tape.sum(weighted), -1.0 / normalizer)


# --- 2. SCHEDULE AND OPTIMIZER ---


def lr_schedule(
    step: int,
    warmup_steps: int,
    peak_lr: float,
    total_steps: int | None = None,
    cosine_decay: bool = False,
) -> float:
    """
    peak_lr * min(1, (step + 1) / warmup_steps); with `cosine_decay`, a half cosine
    from peak_lr to 0 over the steps after warm-up.
    """
    lr = peak_lr * min(1.0, (step + 1) / warmup_steps)
    if cosine_decay and total_steps is not None and step + 1 > warmup_steps:
        span = max(1, total_steps - warmup_steps)
        progress = min(1.0, (step + 1 - warmup_steps) / span)
        lr = peak_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
    return lr


@dataclass
class OptimizerState:
    """Adam moments and hyperparameters. `step` counts applied updates."""

    step: int = 0
    m: dict[str, Tensor] = field(default_factory=lambda: {})
    v: dict[str, Tensor] = field(default_factory=lambda: {})
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    peak_lr: float = 1e-3
    warmup_steps: int = 100
    total_steps: int | None = None
    cosine_decay: bool = False

    @classmethod
    def create(cls, params: ModelParams, run_config: TrainRunConfig | None = None) -> "OptimizerState":
        run = run_config or TrainRunConfig()
        zeros = {name: np.zeros_like(t) for name, t in params.tensors.items()}
        return cls(
            m=zeros,
            v={name: z.copy() for name, z in zeros.items()},
            beta1=run.beta1,
            beta2=run.beta2,
            eps_adam=run.adam_eps,
            peak_lr=run.peak_lr,
            warmup_steps=run.warmup_steps,
            total_steps=run.total_steps,
            cosine_decay=run.cosine_decay,
        )

    @property
    def lr(self) -> float:
        """Learning rate the next update will use."""
        return lr_schedule(self.step, self.warmup_steps, self.peak_lr, self.total_steps, self.cosine_decay)


def adam_step(
    params: ModelParams,
    grads: Mapping[str, Tensor],
    state: OptimizerState,
) -> tuple[ModelParams, OptimizerState]:
    """
    One Adam update with bias correction at t = state.step + 1. Returns new params
    and state; the inputs are left untouched.

    Raises:
        NonFiniteGradientError: Naming the first parameter whose gradient is NaN/inf.
    """
    for name in params.tensors:
        grad = grads[name]
        if grad.shape != params.tensors[name].shape:
            raise ShapeMismatchError(f"adam_step({name})", params.tensors[name].shape, grad.shape)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(name)

    t = state.step + 1
    lr = state.lr
    b1, b2 = state.beta1, state.beta2
    m: dict[str, Tensor] = {}
    v: dict[str, Tensor] = {}
    tensors: dict[str, Tensor] = {}
    for name, theta in params.tensors.items():
        g = grads[name]
        m[name] = b1 * state.m[name] + (1 - b1) * g
        v[name] = b2 * state.v[name] + (1 - b2) * (g * g)
        m_hat = m[name] / (1 - b1**t)
        v_hat = v[name] / (1 - b2**t)
        tensors[name] = (theta - lr * m_hat / (np.sqrt(v_hat) + state.eps_adam)).astype(theta.dtype, copy=False)

    new_state = OptimizerState(
        step=t,
        m=m,
        v=v,
        beta1=b1,
        beta2=b2,
        eps_adam=state.eps_adam,
        peak_lr=state.peak_lr,
        warmup_steps=state.warmup_steps,
        total_steps=state.total_steps,
        cosine_decay=state.cosine_decay,
    )
    return ModelParams(params.config, tensors), new_state


# --- 3. TRAINING LOOP ---


@dataclass
class TrainingHistory:
    """Per-step losses and per-epoch held-out reports."""

    steps: list[StepRecord] = field(default_factory=lambda: [])
    epochs: list[EpochRecord] = field(default_factory=lambda: [])
    reports: list[MetricsReport | None] = field(default_factory=lambda: [])

    @property
    def losses(self) -> list[float]:
        return [row.loss for row in self.steps]


class TrainResult(NamedTuple):
    params: ModelParams
    history: TrainingHistory


class FoldResult(NamedTuple):
    fold: int
    held_out_ids: list[str]
    report: MetricsReport | None


StepCallback = Callable[[StepRecord], None]


def split_validation(
    records: Sequence[TimeSeriesRecord], fraction: float
) -> tuple[list[TimeSeriesRecord], list[TimeSeriesRecord]]:
    """Hold out the last `int(n * fraction)` records by id; at least one record stays for training."""
    ordered = sorted(records, key=lambda r: r.id)
    held_out = min(int(len(ordered) * fraction), len(ordered) - 1)
    if held_out <= 0:
        return ordered, []
    return ordered[:-held_out], ordered[-held_out:]


def check_dataset(records: Sequence[TimeSeriesRecord]) -> None:
    if not records:
        raise EmptyDatasetError()
    kinds = {record.kind.value for record in records}
    if len(kinds) > 1:
        raise MixedDatasetKindError(sorted(kinds))


def _block_order(count: int, rng: SeededRng) -> Iterator[int]:
    """Endless stream of block indices, a fresh permutation per pass."""
    while True:
        yield from (int(i) for i in rng.permutation(count))


def block_gradient(
    params: ModelParams,
    block: Block,
    config: ModelConfig,
    run_config: TrainRunConfig,
    rng: SeededRng,
    normalizer: float,
) -> tuple[float, dict[str, Tensor]]:
    """Loss share and parameter gradients of one block in train mode."""
    tape = Tape(params.dtype)
    nodes = params.bind(tape)
    pred = forward(tape, nodes, block.features, config, rng, train_mode=True)
    loss = masked_bce_loss(
        tape, pred, block.targets, block.mask, run_config.loss_eps, run_config.mask_floor, normalizer=normalizer
    )
    tape.backward(loss)
    return float(loss.data), {name: node.grad for name, node in nodes.items()}


def _safe_evaluate(
    records: Sequence[TimeSeriesRecord], params: ModelParams, threshold: float, threads: int
) -> MetricsReport | None:
    if not records:
        return None
    try:
        return evaluate(records, params, threshold=threshold, threads=threads)
    except PipelineError as e:
        logger.warning(f"held-out metrics unavailable: {e.detail}")
        return None


def train(
    dataset: Sequence[TimeSeriesRecord],
    model_config: ModelConfig,
    run_config: TrainRunConfig,
    threshold: float = 0.5,
    on_step: StepCallback | None = None,
) -> TrainResult:
    """
    Train one model on records of a single kind.

    Raises:
        EmptyDatasetError: If there are no records or no block with a nonzero mask.
        MixedDatasetKindError: If the records mix tdcsfog and defog.
        ZeroMaskError, NonFiniteGradientError: With the failing step index.
    """
    check_dataset(dataset)
    train_records, held_out = split_validation(dataset, run_config.validation_fraction)
    blocks = prepare_blocks(train_records, model_config, run_config.block_stride, threads=run_config.threads)
    if not blocks:
        raise EmptyDatasetError("no training block has a nonzero mask")

    dtype = np.dtype(run_config.precision)
    params = init_params(model_config, run_config.seed).astype(dtype)
    state = OptimizerState.create(params, run_config)
    shuffle_rng, dropout_rng = SeededRng(run_config.seed).split(2)
    order = _block_order(len(blocks), shuffle_rng)
    history = TrainingHistory()

    logger.info(
        f"training on {len(train_records)} record(s) / {len(blocks)} block(s), "
        f"{len(held_out)} held out, {params.num_parameters} parameters, {run_config.total_steps} steps"
    )
    pool = ThreadPoolExecutor(max_workers=run_config.threads) if run_config.threads > 1 else None
    report_every = max(1, run_config.steps_per_epoch // 10)
    try:
        step = 0
        for epoch in range(run_config.epochs):
            epoch_losses: list[float] = []
            for _ in range(run_config.steps_per_epoch):
                batch = [blocks[next(order)] for _ in range(run_config.batch_size)]
                rngs = dropout_rng.split(len(batch))
                try:
                    total = 3.0 * float(sum(float(block.mask.sum()) for block in batch))
                    if total < run_config.mask_floor:
                        raise ZeroMaskError(total, run_config.mask_floor)

                    def work(
                        item: tuple[Block, SeededRng], p: ModelParams = params, n: float = total
                    ) -> tuple[float, dict[str, Tensor]]:
                        return block_gradient(p, item[0], model_config, run_config, item[1], n)

                    items = list(zip(batch, rngs, strict=True))
                    results = list(pool.map(work, items)) if pool else [work(item) for item in items]

                    loss = 0.0
                    grads = {name: np.zeros_like(t) for name, t in params.tensors.items()}
                    for block_loss, block_grads in results:
                        loss += block_loss
                        for name, g in block_grads.items():
                            grads[name] += g
                    if not math.isfinite(loss):
                        raise NonFiniteGradientError("loss")

                    lr = state.lr
                    params, state = adam_step(params, grads, state)
                except FogDetectError as e:
                    raise e.at_step(step)

                row = StepRecord(step=step, epoch=epoch, lr=lr, loss=loss)
                history.steps.append(row)
                epoch_losses.append(loss)
                if on_step is not None:
                    on_step(row)
                if step % report_every == 0:
                    logger.info(f"epoch {epoch} step {step}: lr={lr:.3e} loss={loss:.6f}")
                step += 1

            report = _safe_evaluate(held_out, params, threshold, run_config.threads)
            mean_loss = float(np.mean(epoch_losses))
            history.epochs.append(EpochRecord(epoch, mean_loss, report.to_flat() if report is not None else None))
            history.reports.append(report)
            summary = "no held-out metrics"
            if report is not None and report.map is not None:
                summary = f"mAP={report.map:.4f}"
            logger.info(f"epoch {epoch} done: mean loss {mean_loss:.6f}, {summary}")
    finally:
        if pool is not None:
            pool.shutdown()

    return TrainResult(params=params, history=history)


def cross_validate(
    dataset: Sequence[TimeSeriesRecord],
    model_config: ModelConfig,
    run_config: TrainRunConfig,
    folds: int | None = None,
    threshold: float = 0.5,
) -> list[FoldResult]:
    """
    k-fold cross-validation over contiguous folds of the records in id order. Each
    fold trains on the others (no inner held-out split) and is scored on itself.
    """
    check_dataset(dataset)
    k = folds if folds is not None else run_config.folds
    ordered = sorted(dataset, key=lambda r: r.id)
    if not 2 <= k <= len(ordered):
        raise ConfigInvalidError("folds", f"need 2 <= folds <= number of records ({len(ordered)}), got {k}")

    fold_config = run_config.model_copy(update={"validation_fraction": 0.0, "folds": 0})
    results: list[FoldResult] = []
    for fold, indices in enumerate(np.array_split(np.arange(len(ordered)), k)):
        held = set(int(i) for i in indices)
        held_out = [ordered[i] for i in sorted(held)]
        training = [r for i, r in enumerate(ordered) if i not in held]
        logger.info(f"fold {fold + 1}/{k}: training on {len(training)}, scoring {len(held_out)}")
        trained = train(training, model_config, fold_config, threshold=threshold)
        report = _safe_evaluate(held_out, trained.params, threshold, run_config.threads)
        results.append(FoldResult(fold, [r.id for r in held_out], report))
    return results
