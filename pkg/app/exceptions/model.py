"""
Numeric Core, Training and Scoring Exceptions 🧮

Contents:
- ShapeMismatchError, LengthMismatchError: operands of incompatible shape.
- RateOutOfRangeError, ConfigInvalidError: invalid hyperparameters (exit 2).
- ZeroMaskError, NonFiniteGradientError: a training step cannot proceed (exit 4).
- MixedDatasetKindError, EmptyDatasetError: the dataset handed to training is unusable.
- AllUndefinedError: no class produced a defined average precision.
- ConfigMismatchError, CheckpointFormatError: checkpoint vs configuration (exit 5).
"""

from .base import CompatibilityError, ConfigError, PipelineError


class ShapeMismatchError(PipelineError):
    """Raised when tensor shapes are incompatible for an operation."""

    def __init__(self, op: str, *shapes: tuple[int, ...]):
        rendered = ", ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class LengthMismatchError(PipelineError):
    """Raised when metric inputs differ in length."""

    def __init__(self, *lengths: int):
        super().__init__(f"inputs must have equal length, got {list(lengths)}")


class RateOutOfRangeError(ConfigError):
    """Raised when a dropout rate is outside [0, 1)."""

    def __init__(self, rate: float):
        super().__init__(f"dropout rate must be in [0, 1), got {rate}")


class ConfigInvalidError(ConfigError):
    """Raised when a configuration value fails validation. Names the offending key."""

    def __init__(self, key: str, reason: str):
        super().__init__(f"invalid value for '{key}': {reason}")
        self.key = key


class ZeroMaskError(PipelineError):
    """Raised when the total mask weight of a batch falls below the configured floor."""

    def __init__(self, total: float, floor: float):
        super().__init__(f"mask total {total} is below mask_floor {floor}; batch rejected")


class NonFiniteGradientError(PipelineError):
    """Raised when a gradient tensor contains NaN or infinity."""

    def __init__(self, name: str):
        super().__init__(f"non-finite gradient for parameter '{name}'")
        self.name = name


class MixedDatasetKindError(PipelineError):
    """Raised when a dataset mixes tdcsfog and defog recordings."""

    def __init__(self, kinds: list[str]):
        super().__init__(f"dataset mixes recording kinds {sorted(kinds)}; train one model per kind")


class EmptyDatasetError(PipelineError):
    """Raised when there is nothing to train or evaluate on."""

    def __init__(self, detail: str = "dataset is empty"):
        super().__init__(detail)


class AllUndefinedError(PipelineError):
    """Raised when every per-class average precision is undefined."""

    def __init__(self):
        super().__init__("no class has a defined average precision (no positives survive the mask)")


class ConfigMismatchError(CompatibilityError):
    """Raised when parameters or inputs do not match the model configuration."""

    def __init__(self, key: str, expected: object, actual: object):
        super().__init__(f"'{key}' mismatch: checkpoint/model has {expected}, got {actual}")
        self.key = key


class CheckpointFormatError(CompatibilityError):
    """Raised when a checkpoint file is not a readable checkpoint of a supported version."""

    def __init__(self, detail: str):
        super().__init__(detail)
