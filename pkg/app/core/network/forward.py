"""
Full forward pass: patch embedding -> encoder stack -> two Bi-LSTM layers -> sigmoid head.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.autodiff import SeededRng, Tape, Value
from app.exceptions import ConfigMismatchError
from app.schemas import ModelConfig

from .layers import Nodes, bilstm_layer, embed_patches, encoder_layer, linear
from .params import LSTM_LAYERS, ModelParams, parameter_shapes


def _check_nodes(nodes: Nodes, config: ModelConfig) -> None:
    for name, shape in parameter_shapes(config).items():
        node = nodes.get(name)
        if node is None:
            raise ConfigMismatchError(name, shape, "missing")
        if node.shape != shape:
            raise ConfigMismatchError(name, shape, node.shape)


def forward(
    tape: Tape,
    nodes: Nodes,
    features: ArrayLike | Value,
    config: ModelConfig,
    rng: SeededRng | None = None,
    train_mode: bool = False,
) -> Value:
    """
    Confidences [num_patches x 3], every entry in (0, 1).

    Args:
        tape: Tape the pass is recorded on.
        nodes: Parameter nodes bound to `tape`.
        features: One block's normalized acceleration [block_size x 3].
        config: Architecture the parameters were built for.
        rng: Dropout stream; only consulted in train mode.
        train_mode: Enables the first, encoder and attention dropouts.

    Raises:
        ConfigMismatchError: If the block or the parameters do not conform to `config`.
    """
    x = features if isinstance(features, Value) else tape.constant(features)
    if x.shape != (config.block_size, 3):
        raise ConfigMismatchError("block_size", (config.block_size, 3), x.shape)
    _check_nodes(nodes, config)

    h = embed_patches(tape, nodes, x, config)
    h = tape.dropout(h, config.first_dropout, rng, train_mode)
    for i in range(config.num_encoder_layers):
        h = encoder_layer(tape, nodes, i, h, config, rng, train_mode)
    for layer in range(LSTM_LAYERS):
        h = bilstm_layer(tape, nodes, layer, h)
    return tape.sigmoid(linear(tape, h, nodes["head.weight"], nodes["head.bias"]))


def predict_block(
    params: ModelParams,
    features: ArrayLike,
    config: ModelConfig | None = None,
) -> NDArray[np.float64]:
    """Eval-mode forward of one block as a plain array."""
    config = config or params.config
    if config != params.config:
        params.check_compatible(config)
    tape = Tape(params.dtype)
    return forward(tape, params.bind(tape), features, config).data.astype(np.float64)
