"""
Training-run settings: batching, schedule, optimizer and loss constants.
"""

from typing import Literal, Self

from pydantic import Field, model_validator

from app.config.app import get_default_seed, get_precision, get_threads
from app.exceptions import ConfigInvalidError

from .base import SettingsModel


class TrainRunConfig(SettingsModel):
    """How one model is trained. Everything here is positive; defaults follow common Adam practice."""

    seed: int = Field(default_factory=get_default_seed, ge=0, description="Seed for init, shuffling and dropout")
    batch_size: int = Field(default=8, ge=1, description="Blocks per optimizer step")
    steps_per_epoch: int = Field(default=100, ge=1, description="Optimizer steps per epoch")
    epochs: int = Field(default=1, ge=1, description="Number of epochs")
    block_stride: int | None = Field(default=None, ge=1, description="Training block stride (default block_size)")

    peak_lr: float = Field(default=1e-3, gt=0.0, description="Learning rate after warm-up")
    warmup_steps: int = Field(default=100, ge=1, description="Linear warm-up length")
    cosine_decay: bool = Field(default=False, description="Half-cosine decay after warm-up")
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0, description="Adam first-moment decay")
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0, description="Adam second-moment decay")
    adam_eps: float = Field(default=1e-8, gt=0.0, description="Adam denominator epsilon")

    loss_eps: float = Field(default=1e-7, gt=0.0, lt=0.5, description="BCE prediction clip")
    mask_floor: float = Field(default=1.0, gt=0.0, description="Minimum total mask weight of a batch")

    validation_fraction: float = Field(default=0.2, ge=0.0, lt=1.0, description="Held-out share (last ids)")
    folds: int = Field(default=0, ge=0, description="k-fold cross-validation; 0 disables")

    threads: int = Field(default_factory=get_threads, ge=1, description="Data-parallel gradient workers")
    precision: Literal["float64", "float32"] = Field(default_factory=get_precision, description="Training dtype")

    @model_validator(mode="after")
    def _check_folds(self) -> Self:
        if self.folds == 1:
            raise ConfigInvalidError("folds", "cross-validation needs at least 2 folds (0 disables it)")
        return self

    @property
    def total_steps(self) -> int:
        return self.epochs * self.steps_per_epoch
