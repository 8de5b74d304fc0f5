import numpy as np
import pytest

from app.core.autodiff import Tape, Value, grad_check
from app.core.network import (
    ModelParams,
    bilstm_layer,
    embed_patches,
    encoder_layer,
    forward,
    glorot_limit,
    init_params,
    multi_head_attention,
    parameter_shapes,
    predict_block,
)
from app.exceptions import ConfigMismatchError
from app.schemas import ModelConfig
from app.services.training import masked_bce_loss
from tests.conftest import TINY_MODEL


def _features(config: ModelConfig, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).normal(size=(config.block_size, 3))


def _with(params: ModelParams, **replacements: np.ndarray) -> ModelParams:
    tensors = dict(params.tensors)
    tensors.update({name.replace("__", "."): value for name, value in replacements.items()})
    return ModelParams(params.config, tensors)


class TestInit:
    def test_same_seed_identical(self, tiny_config):
        first, second = init_params(tiny_config, 3), init_params(tiny_config, 3)
        for name in first:
            np.testing.assert_array_equal(first[name], second[name])

    def test_different_seed_differs(self, tiny_config):
        first, second = init_params(tiny_config, 3), init_params(tiny_config, 4)
        assert not np.array_equal(first["head.weight"], second["head.weight"])

    def test_biases(self, tiny_params):
        H = tiny_params.config.hidden_size
        for name, tensor in tiny_params.tensors.items():
            if name.startswith("lstm.") and name.endswith(".bias"):
                np.testing.assert_array_equal(tensor[H : 2 * H], 1.0)
                np.testing.assert_array_equal(np.delete(tensor, np.s_[H : 2 * H]), 0.0)
            elif name.endswith(".bias") or name.endswith(".beta") or name == "embed.position":
                np.testing.assert_array_equal(tensor, 0.0)
            elif name.endswith(".gamma"):
                np.testing.assert_array_equal(tensor, 1.0)

    def test_weights_within_glorot_limit(self, tiny_params):
        for name, tensor in tiny_params.tensors.items():
            if name.endswith("weight"):
                assert np.abs(tensor).max() <= glorot_limit(tensor.shape)

    def test_shapes_follow_config(self, tiny_config, tiny_params):
        assert {name: t.shape for name, t in tiny_params.tensors.items()} == parameter_shapes(tiny_config)

    def test_incompatible_config(self, tiny_params):
        other = ModelConfig.build(**{**TINY_MODEL, "patch_size": 2})
        with pytest.raises(ConfigMismatchError):
            tiny_params.check_compatible(other)


class TestEmbedding:
    def test_shape(self, tiny_config, tiny_params):
        tape = Tape()
        out = embed_patches(tape, tiny_params.bind(tape), tape.constant(_features(tiny_config)), tiny_config)
        assert out.shape == (2, tiny_config.model_dim)

    def test_zero_features_give_bias(self, tiny_config, tiny_params):
        bias = np.arange(8.0)
        params = _with(tiny_params, embed__bias=bias)
        tape = Tape()
        out = embed_patches(tape, params.bind(tape), tape.constant(np.zeros((8, 3))), tiny_config)
        np.testing.assert_array_equal(out.data, np.tile(bias, (2, 1)))

    def test_positional_term_is_additive(self, tiny_config, tiny_params):
        position = np.eye(2, 8)
        params = _with(tiny_params, embed__weight=np.zeros((12, 8)), embed__position=position)
        tape = Tape()
        out = embed_patches(tape, params.bind(tape), tape.constant(_features(tiny_config)), tiny_config)
        np.testing.assert_array_equal(out.data, position)


class TestAttention:
    def test_single_row_passes_value_through(self, tiny_params):
        config = ModelConfig.build(**{**TINY_MODEL, "block_size": 4})
        params = init_params(config, 1)
        x = np.random.default_rng(0).normal(size=(1, 8))
        tape = Tape()
        sink: list[np.ndarray] = []

        out = multi_head_attention(
            tape, params.bind(tape), "encoder.0.attention", tape.constant(x), config, None, False, sink
        )

        value = x @ params["encoder.0.attention.value.weight"] + params["encoder.0.attention.value.bias"]
        expected = value @ params["encoder.0.attention.output.weight"] + params["encoder.0.attention.output.bias"]
        np.testing.assert_allclose(out.data, expected, atol=1e-12)
        assert all(np.array_equal(w, [[1.0]]) for w in sink)

    def test_rows_sum_to_one(self, tiny_config, tiny_params):
        x = np.random.default_rng(1).normal(size=(5, 8))
        tape = Tape()
        sink: list[np.ndarray] = []
        multi_head_attention(
            tape, tiny_params.bind(tape), "encoder.0.attention", tape.constant(x), tiny_config, None, False, sink
        )
        assert len(sink) == tiny_config.num_heads
        for weights in sink:
            np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-12)

    def test_permutation_equivariant(self, tiny_config, tiny_params):
        x = np.random.default_rng(2).normal(size=(5, 8))
        perm = np.array([3, 0, 4, 1, 2])

        def run(rows: np.ndarray) -> np.ndarray:
            tape = Tape()
            nodes = tiny_params.bind(tape)
            return multi_head_attention(
                tape, nodes, "encoder.0.attention", tape.constant(rows), tiny_config, None, False
            ).data

        np.testing.assert_allclose(run(x[perm]), run(x)[perm], atol=1e-12)


class TestEncoderLayer:
    def test_zero_branches_reduce_to_double_norm(self, tiny_config, tiny_params):
        params = _with(
            tiny_params,
            encoder__0__attention__output__weight=np.zeros((8, 8)),
            encoder__0__attention__output__bias=np.zeros(8),
            encoder__0__ffn__outer__weight=np.zeros((16, 8)),
            encoder__0__ffn__outer__bias=np.zeros(8),
        )
        x = np.random.default_rng(3).normal(size=(2, 8))
        tape = Tape()
        out = encoder_layer(tape, params.bind(tape), 0, tape.constant(x), tiny_config, None, False)

        def norm(v: np.ndarray) -> np.ndarray:
            return (v - v.mean(axis=-1, keepdims=True)) / np.sqrt(v.var(axis=-1, keepdims=True) + 1e-5)

        np.testing.assert_allclose(out.data, norm(norm(x)), atol=1e-10)

    @pytest.mark.parametrize("rows", [1, 2, 7])
    def test_shape_preserved(self, tiny_config, tiny_params, rows: int):
        tape = Tape()
        x = tape.constant(np.ones((rows, 8)))
        assert encoder_layer(tape, tiny_params.bind(tape), 0, x, tiny_config, None, False).shape == (rows, 8)

    def test_identical_patches_stay_identical(self):
        config = ModelConfig.build(**{**TINY_MODEL, "block_size": 16, "num_encoder_layers": 2})
        params = _with(init_params(config, 9), embed__position=np.zeros((config.num_patches, config.model_dim)))
        patch = np.random.default_rng(6).normal(size=(config.patch_size, 3))
        tape = Tape()
        nodes = params.bind(tape)

        h = embed_patches(tape, nodes, tape.constant(np.tile(patch, (config.num_patches, 1))), config)
        for i in range(config.num_encoder_layers):
            h = encoder_layer(tape, nodes, i, h, config, None, False)

        np.testing.assert_allclose(h.data, np.tile(h.data[0], (config.num_patches, 1)), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("post_norm", [True, False])
    def test_gradient(self, post_norm: bool):
        config = ModelConfig.build(**{**TINY_MODEL, "post_norm": post_norm})
        params = init_params(config, 5)
        names = [n for n in params if n.startswith("encoder.0.")]
        x = np.random.default_rng(4).normal(size=(3, 8))
        weights = np.random.default_rng(5).normal(size=(3, 8))

        def fn(tape: Tape, leaves: list[Value]) -> Value:
            nodes = dict(zip(["x", *names], leaves, strict=True))
            out = encoder_layer(tape, nodes, 0, nodes["x"], config, None, False)
            return tape.sum(tape.mul(out, tape.constant(weights)))

        assert grad_check(fn, [x, *(params[n] for n in names)], floor=1e-6) < 1e-4


class TestBiLstm:
    def test_zero_weights_zero_output(self, tiny_params):
        lstm = [n for n in tiny_params if n.startswith("lstm.0.")]
        zeros = {n.replace(".", "__"): np.zeros_like(tiny_params[n]) for n in lstm}
        zeroed = _with(tiny_params, **zeros)
        tape = Tape()
        out = bilstm_layer(tape, zeroed.bind(tape), 0, tape.constant(np.random.default_rng(0).normal(size=(3, 8))))
        np.testing.assert_array_equal(out.data, 0.0)

    def test_reversal_swaps_directions(self, tiny_params):
        shared = {
            f"lstm__0__backward__{part}": tiny_params[f"lstm.0.forward.{part}"]
            for part in ("input_weight", "recurrent_weight", "bias")
        }
        params = _with(tiny_params, **shared)
        x = np.random.default_rng(6).normal(size=(3, 8))
        H = params.config.hidden_size

        def run(rows: np.ndarray) -> np.ndarray:
            tape = Tape()
            return bilstm_layer(tape, params.bind(tape), 0, tape.constant(rows)).data

        out, reversed_out = run(x), run(x[::-1])
        np.testing.assert_allclose(reversed_out[:, :H], out[::-1, H:], atol=1e-12)
        np.testing.assert_allclose(reversed_out[:, H:], out[::-1, :H], atol=1e-12)

    def test_single_step(self, tiny_params):
        tape = Tape()
        out = bilstm_layer(tape, tiny_params.bind(tape), 0, tape.constant(np.ones((1, 8))))
        assert out.shape == (1, 2 * tiny_params.config.hidden_size)

    def test_gradient(self, tiny_params):
        names = [n for n in tiny_params if n.startswith("lstm.0.")]
        x = np.random.default_rng(7).normal(size=(3, 8))
        weights = np.random.default_rng(8).normal(size=(3, 8))

        def fn(tape: Tape, leaves: list[Value]) -> Value:
            nodes = dict(zip(["x", *names], leaves, strict=True))
            return tape.sum(tape.mul(bilstm_layer(tape, nodes, 0, nodes["x"]), tape.constant(weights)))

        assert grad_check(fn, [x, *(tiny_params[n] for n in names)], floor=1e-6) < 1e-4


class TestForward:
    def test_shape_and_range(self, tiny_config, tiny_params):
        out = predict_block(tiny_params, _features(tiny_config))
        assert out.shape == (2, 3)
        assert np.all((out > 0.0) & (out < 1.0))

    def test_eval_is_deterministic(self, tiny_config, tiny_params):
        features = _features(tiny_config, 9)
        np.testing.assert_array_equal(predict_block(tiny_params, features), predict_block(tiny_params, features))

    def test_wrong_block_size(self, tiny_params):
        with pytest.raises(ConfigMismatchError):
            predict_block(tiny_params, np.zeros((12, 3)))

    @pytest.mark.parametrize(
        "overrides",
        [{}, {"post_norm": False, "num_heads": 1, "lstm_hidden": 3, "ffn_dim": 8}],
    )
    def test_whole_model_gradient(self, overrides):
        config = ModelConfig.build(**{**TINY_MODEL, **overrides})
        params = init_params(config, 11)
        names = list(params)
        rng = np.random.default_rng(12)
        features = rng.normal(size=(config.block_size, 3))
        targets = rng.integers(0, 2, size=(config.num_patches, 3))
        mask = np.array([1.0, 0.0]) if config.num_patches == 2 else np.ones(config.num_patches)

        def fn(tape: Tape, leaves: list[Value]) -> Value:
            nodes = dict(zip(names, leaves, strict=True))
            pred = forward(tape, nodes, features, config)
            return masked_bce_loss(tape, pred, targets, mask)

        assert grad_check(fn, [params[n] for n in names], floor=1e-6) < 1e-4

    @pytest.mark.parametrize("seed", range(6))
    def test_shape_chain_for_random_geometry(self, seed: int):
        rng = np.random.default_rng(seed)
        heads = int(rng.integers(1, 4))
        patch = int(rng.integers(1, 6))
        config = ModelConfig.build(
            block_size=patch * int(rng.integers(1, 6)),
            patch_size=patch,
            model_dim=heads * int(rng.integers(1, 5)),
            num_heads=heads,
            num_encoder_layers=int(rng.integers(1, 3)),
            ffn_dim=int(rng.integers(1, 10)),
            lstm_hidden=int(rng.integers(1, 6)),
        )
        P, D, H = config.num_patches, config.model_dim, config.hidden_size
        params = init_params(config, seed)
        tape = Tape()
        nodes = params.bind(tape)

        h = embed_patches(tape, nodes, tape.constant(_features(config, seed)), config)
        assert h.shape == (P, D)
        for i in range(config.num_encoder_layers):
            h = encoder_layer(tape, nodes, i, h, config, None, False)
            assert h.shape == (P, D)
        for layer in range(2):
            h = bilstm_layer(tape, nodes, layer, h)
            assert h.shape == (P, 2 * H)
        assert forward(tape, nodes, _features(config, seed), config).shape == (P, 3)
