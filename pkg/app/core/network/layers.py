"""
Network building blocks on the differentiation tape.

Each function takes the tape, the bound parameter nodes (see ModelParams.bind) and
the canonical name prefix of its layer. Activations are 2-D: one row per patch.
"""

import math

import numpy as np
from numpy.typing import NDArray

from app.core.autodiff import SeededRng, Tape, Value
from app.exceptions import ShapeMismatchError
from app.schemas import ModelConfig

Nodes = dict[str, Value]


def linear(tape: Tape, x: Value, weight: Value, bias: Value) -> Value:
    return tape.add(tape.matmul(x, weight), bias)


def embed_patches(tape: Tape, nodes: Nodes, features: Value, config: ModelConfig) -> Value:
    """
    [block_size x 3] -> [num_patches x D]. Each patch is flattened time-major
    (sample 0 AccV, AccML, AccAP, sample 1 ...), projected, then the trainable
    positional row of that patch is added.
    """
    if features.shape != (config.block_size, 3):
        raise ShapeMismatchError("embed_patches", features.shape, (config.block_size, 3))
    flat = tape.reshape(features, (config.num_patches, 3 * config.patch_size))
    projected = linear(tape, flat, nodes["embed.weight"], nodes["embed.bias"])
    return tape.add(projected, nodes["embed.position"])


def multi_head_attention(
    tape: Tape,
    nodes: Nodes,
    prefix: str,
    x: Value,
    config: ModelConfig,
    rng: SeededRng | None,
    train_mode: bool,
    weights_sink: list[NDArray[np.floating]] | None = None,
) -> Value:
    """
    Bidirectional scaled dot-product self-attention, one softmax per head.

    `weights_sink`, when given, receives each head's [L x L] attention weights
    (before dropout) for inspection.
    """
    L, D = x.shape
    if D != config.model_dim:
        raise ShapeMismatchError("multi_head_attention", x.shape, (L, config.model_dim))

    def project(name: str) -> Value:
        return linear(tape, x, nodes[f"{prefix}.{name}.weight"], nodes[f"{prefix}.{name}.bias"])

    query, key, value = project("query"), project("key"), project("value")
    d_h = config.head_dim
    heads: list[Value] = []
    for h in range(config.num_heads):
        columns = (slice(None), slice(h * d_h, (h + 1) * d_h))
        q_h = tape.getitem(query, columns)
        k_h = tape.getitem(key, columns)
        v_h = tape.getitem(value, columns)
        scores = tape.scale(tape.matmul(q_h, tape.transpose(k_h)), 1.0 / math.sqrt(d_h))
        weights = tape.softmax(scores, axis=-1)
        if weights_sink is not None:
            weights_sink.append(weights.data.copy())
        weights = tape.dropout(weights, config.mha_dropout, rng, train_mode)
        heads.append(tape.matmul(weights, v_h))

    merged = heads[0] if len(heads) == 1 else tape.concat(heads, axis=1)
    return linear(tape, merged, nodes[f"{prefix}.output.weight"], nodes[f"{prefix}.output.bias"])


def feed_forward(tape: Tape, nodes: Nodes, prefix: str, x: Value) -> Value:
    inner = tape.relu(linear(tape, x, nodes[f"{prefix}.inner.weight"], nodes[f"{prefix}.inner.bias"]))
    return linear(tape, inner, nodes[f"{prefix}.outer.weight"], nodes[f"{prefix}.outer.bias"])


def encoder_layer(
    tape: Tape,
    nodes: Nodes,
    index: int,
    x: Value,
    config: ModelConfig,
    rng: SeededRng | None,
    train_mode: bool,
) -> Value:
    """
    Post-norm (default): y = LN(x + drop(MHA(x))), z = LN(y + drop(FFN(y))).
    Pre-norm: y = x + drop(MHA(LN(x))), z = y + drop(FFN(LN(y))).
    Dropout sits on the branch output, before the residual addition.
    """
    prefix = f"encoder.{index}"

    def norm(name: str, v: Value) -> Value:
        return tape.layer_norm(v, nodes[f"{prefix}.{name}.gamma"], nodes[f"{prefix}.{name}.beta"])

    def attend(v: Value) -> Value:
        out = multi_head_attention(tape, nodes, f"{prefix}.attention", v, config, rng, train_mode)
        return tape.dropout(out, config.encoder_dropout, rng, train_mode)

    def transform(v: Value) -> Value:
        out = feed_forward(tape, nodes, f"{prefix}.ffn", v)
        return tape.dropout(out, config.encoder_dropout, rng, train_mode)

    if config.post_norm:
        y = norm("attention_norm", tape.add(x, attend(x)))
        return norm("ffn_norm", tape.add(y, transform(y)))

    y = tape.add(x, attend(norm("attention_norm", x)))
    return tape.add(y, transform(norm("ffn_norm", y)))


def lstm_direction(
    tape: Tape,
    x: Value,
    input_weight: Value,
    recurrent_weight: Value,
    bias: Value,
    reverse: bool,
) -> Value:
    """
    One LSTM pass with zero initial state. Gates i, f, g, o occupy consecutive
    H-wide column blocks. Returns hidden states [L x H] in input order.
    """
    L = x.shape[0]
    H = recurrent_weight.shape[0]
    if input_weight.shape != (x.shape[1], 4 * H) or recurrent_weight.shape != (H, 4 * H):
        raise ShapeMismatchError("lstm", x.shape, input_weight.shape, recurrent_weight.shape)

    projected = linear(tape, x, input_weight, bias)
    h = tape.constant(np.zeros((1, H)))
    c = tape.constant(np.zeros((1, H)))
    hidden: list[Value | None] = [None] * L

    def gate(gates: Value, k: int) -> Value:
        return tape.getitem(gates, (slice(None), slice(k * H, (k + 1) * H)))

    for t in reversed(range(L)) if reverse else range(L):
        gates = tape.add(tape.getitem(projected, (slice(t, t + 1), slice(None))), tape.matmul(h, recurrent_weight))
        i = tape.sigmoid(gate(gates, 0))
        f = tape.sigmoid(gate(gates, 1))
        g = tape.tanh(gate(gates, 2))
        o = tape.sigmoid(gate(gates, 3))
        c = tape.add(tape.mul(f, c), tape.mul(i, g))
        h = tape.mul(o, tape.tanh(c))
        hidden[t] = h

    rows = [row for row in hidden if row is not None]
    return rows[0] if L == 1 else tape.concat(rows, axis=0)


def bilstm_layer(tape: Tape, nodes: Nodes, layer: int, x: Value) -> Value:
    """[L x d_in] -> [L x 2H]; row t is concat(h_t forward, h_t backward)."""
    halves: list[Value] = []
    for direction, reverse in (("forward", False), ("backward", True)):
        prefix = f"lstm.{layer}.{direction}"
        halves.append(
            lstm_direction(
                tape,
                x,
                nodes[f"{prefix}.input_weight"],
                nodes[f"{prefix}.recurrent_weight"],
                nodes[f"{prefix}.bias"],
                reverse=reverse,
            )
        )
    return tape.concat(halves, axis=1)
