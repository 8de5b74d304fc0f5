"""
Transformer-encoder / Bi-LSTM fusion network.
"""

from .forward import forward, predict_block
from .layers import (
    bilstm_layer,
    embed_patches,
    encoder_layer,
    feed_forward,
    linear,
    lstm_direction,
    multi_head_attention,
)
from .params import NUM_CLASSES, ModelParams, glorot_limit, init_params, parameter_shapes

__all__ = [
    "ModelParams",
    "init_params",
    "parameter_shapes",
    "glorot_limit",
    "NUM_CLASSES",
    "linear",
    "embed_patches",
    "multi_head_attention",
    "feed_forward",
    "encoder_layer",
    "lstm_direction",
    "bilstm_layer",
    "forward",
    "predict_block",
]
