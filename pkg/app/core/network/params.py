"""
Model Parameters and Canonical Naming 🏷️

Every learnable tensor has a stable dotted name. The names, their order and their
shapes derive from ModelConfig alone, so checkpoints written by one run can be
validated against the configuration of another.

Naming scheme (i = encoder layer, l = Bi-LSTM layer 0 or 1, d = forward|backward):

    embed.weight                         [3*patch_size x D]
    embed.bias                           [D]
    embed.position                       [num_patches x D]
    encoder.i.attention.{query,key,value,output}.{weight,bias}
                                         [D x D], [D]
    encoder.i.attention_norm.{gamma,beta}, encoder.i.ffn_norm.{gamma,beta}
                                         [D]
    encoder.i.ffn.inner.{weight,bias}    [D x F], [F]
    encoder.i.ffn.outer.{weight,bias}    [F x D], [D]
    lstm.l.d.input_weight                [in x 4H]   (in = D for l=0, 2H for l=1)
    lstm.l.d.recurrent_weight            [H x 4H]
    lstm.l.d.bias                        [4H]        gate order i, f, g, o
    head.weight, head.bias               [2H x 3], [3]
"""

from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from app.core.autodiff import SeededRng, Tape, Value
from app.exceptions import ConfigMismatchError
from app.schemas import ModelConfig

NUM_CLASSES = 3
LSTM_LAYERS = 2
LSTM_DIRECTIONS = ("forward", "backward")
ATTENTION_PROJECTIONS = ("query", "key", "value", "output")

Tensor = NDArray[np.floating[Any]]


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical name -> shape, in canonical order."""
    D, F, H = config.model_dim, config.ffn_size, config.hidden_size
    shapes: dict[str, tuple[int, ...]] = {
        "embed.weight": (3 * config.patch_size, D),
        "embed.bias": (D,),
        "embed.position": (config.num_patches, D),
    }
    for i in range(config.num_encoder_layers):
        prefix = f"encoder.{i}"
        for projection in ATTENTION_PROJECTIONS:
            shapes[f"{prefix}.attention.{projection}.weight"] = (D, D)
            shapes[f"{prefix}.attention.{projection}.bias"] = (D,)
        shapes[f"{prefix}.attention_norm.gamma"] = (D,)
        shapes[f"{prefix}.attention_norm.beta"] = (D,)
        shapes[f"{prefix}.ffn.inner.weight"] = (D, F)
        shapes[f"{prefix}.ffn.inner.bias"] = (F,)
        shapes[f"{prefix}.ffn.outer.weight"] = (F, D)
        shapes[f"{prefix}.ffn.outer.bias"] = (D,)
        shapes[f"{prefix}.ffn_norm.gamma"] = (D,)
        shapes[f"{prefix}.ffn_norm.beta"] = (D,)
    for layer in range(LSTM_LAYERS):
        width = D if layer == 0 else 2 * H
        for direction in LSTM_DIRECTIONS:
            prefix = f"lstm.{layer}.{direction}"
            shapes[f"{prefix}.input_weight"] = (width, 4 * H)
            shapes[f"{prefix}.recurrent_weight"] = (H, 4 * H)
            shapes[f"{prefix}.bias"] = (4 * H,)
    shapes["head.weight"] = (2 * H, NUM_CLASSES)
    shapes["head.bias"] = (NUM_CLASSES,)
    return shapes


def glorot_limit(shape: tuple[int, ...]) -> float:
    """sqrt(6 / (fan_in + fan_out)) for a [fan_in x fan_out] matrix."""
    fan_in, fan_out = shape
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


@dataclass
class ModelParams:
    """All learnable tensors of one model, keyed by canonical name."""

    config: ModelConfig
    tensors: dict[str, Tensor] = field(default_factory=lambda: {})

    def __post_init__(self) -> None:
        self.check_compatible(self.config)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def dtype(self) -> np.dtype[Any]:
        return next(iter(self.tensors.values())).dtype

    @property
    def num_parameters(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))

    def check_compatible(self, config: ModelConfig) -> None:
        """Raise ConfigMismatchError unless every tensor matches the shapes `config` implies."""
        expected = parameter_shapes(config)
        if list(self.tensors) != list(expected):
            missing = [name for name in expected if name not in self.tensors]
            extra = [name for name in self.tensors if name not in expected]
            raise ConfigMismatchError("parameters", f"missing {missing}", f"unexpected {extra}")
        for name, shape in expected.items():
            actual = self.tensors[name].shape
            if actual != shape:
                raise ConfigMismatchError(name, shape, actual)
            if not np.all(np.isfinite(self.tensors[name])):
                raise ConfigMismatchError(name, "finite values", "non-finite values")

    def astype(self, dtype: type[np.floating[Any]] | np.dtype[Any]) -> "ModelParams":
        return ModelParams(self.config, {name: t.astype(dtype) for name, t in self.tensors.items()})

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {name: t.copy() for name, t in self.tensors.items()})

    def bind(self, tape: Tape) -> dict[str, Value]:
        """Place every tensor on `tape` as a named leaf."""
        return {name: tape.leaf(t, name=name) for name, t in self.tensors.items()}


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """
    Glorot-uniform matrices, zero biases, zero positional encoding, unit LayerNorm
    gain and an LSTM forget-gate bias of 1. Deterministic in `seed`.
    """
    rng = SeededRng(seed)
    H = config.hidden_size
    tensors: dict[str, Tensor] = {}
    for name, shape in parameter_shapes(config).items():
        if name == "embed.position":
            tensors[name] = np.zeros(shape)
        elif name.endswith("weight"):
            limit = glorot_limit(shape)
            tensors[name] = rng.uniform(-limit, limit, size=shape)
        elif name.endswith(".gamma"):
            tensors[name] = np.ones(shape)
        elif name.startswith("lstm.") and name.endswith(".bias"):
            bias = np.zeros(shape)
            bias[H : 2 * H] = 1.0
            tensors[name] = bias
        else:
            tensors[name] = np.zeros(shape)
    return ModelParams(config, tensors)
