import numpy as np
import pytest

from app.core.autodiff import Tape
from app.exceptions import (
    ConfigInvalidError,
    EmptyDatasetError,
    MixedDatasetKindError,
    NonFiniteGradientError,
    ZeroMaskError,
)
from app.models import DatasetKind, StepRecord, TimeSeriesRecord
from app.schemas import ModelConfig, SynthConfig, TrainRunConfig
from app.services.evaluation import evaluate
from app.services.synth import generate_series
from app.services.training import (
    OptimizerState,
    adam_step,
    cross_validate,
    lr_schedule,
    masked_bce_loss,
    split_validation,
    train,
)
from tests.conftest import build_record


def _labeled(record_id: str, length: int = 40, seed: int = 0, kind: DatasetKind = DatasetKind.TDCSFOG):
    labels = np.zeros((length, 3), dtype=np.int8)
    labels[length // 4 : length // 2, 0] = 1
    labels[length // 2 :, 1] = 1
    labels[: length // 4, 2] = 1
    return build_record(length, record_id=record_id, seed=seed, labels=labels, kind=kind)


def _run(**overrides) -> TrainRunConfig:
    values = {
        "seed": 0,
        "batch_size": 2,
        "steps_per_epoch": 3,
        "warmup_steps": 2,
        "validation_fraction": 0.0,
        "threads": 1,
        "precision": "float64",
    }
    return TrainRunConfig.build(**{**values, **overrides})


class TestMaskedBce:
    def _loss(self, pred, target, mask) -> float:
        tape = Tape()
        return float(masked_bce_loss(tape, tape.constant(pred), target, mask).data)

    def test_half_confidence_is_log_two(self):
        assert self._loss([[0.5, 0.5, 0.5]], [[1, 0, 1]], [1.0]) == pytest.approx(0.693147, abs=1e-6)

    def test_confident_prediction(self):
        assert self._loss([[0.9]], [[1]], [[1.0]]) == pytest.approx(0.1053605, abs=1e-6)

    def test_extreme_predictions_are_clipped(self):
        assert np.isfinite(self._loss([[0.0, 1.0, 0.5]], [[1, 0, 1]], [1.0]))

    def test_masked_positions_do_not_matter(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            pred = rng.uniform(0.01, 0.99, size=(4, 3))
            target = rng.integers(0, 2, size=(4, 3))
            mask = np.array([1.0, 0.0, 1.0, 0.0])
            other = pred.copy()
            other[mask == 0] = rng.uniform(0.01, 0.99, size=(2, 3))
            assert self._loss(pred, target, mask) == pytest.approx(self._loss(other, target, mask), rel=1e-12)

    def test_zero_gradient_at_masked_positions(self):
        tape = Tape()
        pred = tape.leaf(np.random.default_rng(1).uniform(0.1, 0.9, size=(3, 3)))
        tape.backward(masked_bce_loss(tape, pred, np.ones((3, 3)), [1.0, 0.0, 1.0]))
        np.testing.assert_array_equal(pred.grad[1], 0.0)
        assert np.all(pred.grad[[0, 2]] != 0.0)

    def test_zero_mask(self):
        with pytest.raises(ZeroMaskError):
            self._loss([[0.5, 0.5, 0.5]], [[1, 0, 1]], [0.0])


class TestLrSchedule:
    @pytest.mark.parametrize("step,expected", [(0, 1e-5), (49, 5e-4), (99, 1e-3), (1000, 1e-3)])
    def test_linear_warmup(self, step: int, expected: float):
        assert lr_schedule(step, 100, 1e-3) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("warmup", [1, 7, 100])
    def test_nondecreasing_and_bounded(self, warmup: int):
        rates = [lr_schedule(step, warmup, 1e-3) for step in range(500)]
        assert all(b >= a for a, b in zip(rates, rates[1:]))
        assert max(rates) <= 1e-3
        assert min(rates) > 0.0

    def test_cosine_decay_stays_bounded(self):
        rates = [lr_schedule(step, 10, 1e-3, total_steps=60, cosine_decay=True) for step in range(80)]
        assert all(0.0 <= rate <= 1e-3 for rate in rates)

    def test_cosine_decay_reaches_zero(self):
        assert lr_schedule(99, 100, 1e-3, total_steps=200, cosine_decay=True) == pytest.approx(1e-3)
        assert lr_schedule(149, 100, 1e-3, total_steps=200, cosine_decay=True) == pytest.approx(5e-4)
        assert lr_schedule(199, 100, 1e-3, total_steps=200, cosine_decay=True) == pytest.approx(0.0, abs=1e-15)


class TestAdam:
    def _state(self, params) -> OptimizerState:
        return OptimizerState.create(params, _run(warmup_steps=1))

    def test_first_step_moves_by_lr(self, tiny_params):
        grads = {name: np.full_like(t, 0.01) for name, t in tiny_params.tensors.items()}

        updated, state = adam_step(tiny_params, grads, self._state(tiny_params))

        for name in tiny_params:
            np.testing.assert_allclose(updated[name] - tiny_params[name], -9.99999e-4, rtol=1e-6)
        assert state.step == 1

    def test_zero_gradient_keeps_params(self, tiny_params):
        grads = {name: np.zeros_like(t) for name, t in tiny_params.tensors.items()}
        updated, _ = adam_step(tiny_params, grads, self._state(tiny_params))
        for name in tiny_params:
            np.testing.assert_array_equal(updated[name], tiny_params[name])

    def test_update_is_scale_invariant(self, tiny_params):
        rng = np.random.default_rng(2)
        grads = {
            name: rng.choice([-1.0, 1.0], t.shape) * rng.uniform(0.5, 2.0, t.shape)
            for name, t in tiny_params.tensors.items()
        }
        small, _ = adam_step(tiny_params, grads, self._state(tiny_params))
        large, _ = adam_step(tiny_params, {n: 1000.0 * g for n, g in grads.items()}, self._state(tiny_params))
        for name in tiny_params:
            np.testing.assert_allclose(small[name], large[name], atol=1e-9)

    def test_step_decreases_squared_norm(self, tiny_params):
        def squared_norm(params) -> float:
            return sum(float(np.sum(params[name] ** 2)) for name in params)

        grads = {name: 2.0 * t for name, t in tiny_params.tensors.items()}
        state = OptimizerState.create(tiny_params, _run(warmup_steps=1, peak_lr=1e-4))

        updated, _ = adam_step(tiny_params, grads, state)

        assert squared_norm(updated) < squared_norm(tiny_params)

    def test_inputs_untouched(self, tiny_params):
        before = tiny_params.copy()
        state = self._state(tiny_params)
        adam_step(tiny_params, {n: np.ones_like(t) for n, t in tiny_params.tensors.items()}, state)
        assert state.step == 0
        for name in tiny_params:
            np.testing.assert_array_equal(tiny_params[name], before[name])

    def test_non_finite_gradient_named(self, tiny_params):
        grads = {name: np.zeros_like(t) for name, t in tiny_params.tensors.items()}
        grads["head.bias"][1] = np.nan
        with pytest.raises(NonFiniteGradientError) as info:
            adam_step(tiny_params, grads, self._state(tiny_params))
        assert "head.bias" in info.value.detail


class TestTrain:
    def test_same_seed_same_model(self, tiny_config):
        dataset = [_labeled(f"r{i}", seed=i) for i in range(3)]
        first = train(dataset, tiny_config, _run())
        second = train(dataset, tiny_config, _run())

        assert first.history.losses == second.history.losses
        for name in first.params:
            np.testing.assert_array_equal(first.params[name], second.params[name])

    def test_threads_reproduce_serial_run(self, tiny_config):
        dataset = [_labeled(f"r{i}", seed=i) for i in range(3)]
        serial = train(dataset, tiny_config, _run())
        parallel = train(dataset, tiny_config, _run(threads=2))
        for name in serial.params:
            np.testing.assert_array_equal(serial.params[name], parallel.params[name])

    def test_history_and_callback(self, tiny_config):
        seen: list[StepRecord] = []
        result = train([_labeled("a")], tiny_config, _run(epochs=2), on_step=seen.append)

        assert [row.step for row in seen] == list(range(6))
        assert [row.epoch for row in seen] == [0, 0, 0, 1, 1, 1]
        assert seen[0].lr == pytest.approx(5e-4)
        assert len(result.history.epochs) == 2
        assert result.history.reports == [None, None]

    def test_held_out_report_per_epoch(self, tiny_config):
        dataset = [_labeled(f"r{i}", seed=i) for i in range(2)]
        result = train(dataset, tiny_config, _run(validation_fraction=0.5))
        (report,) = result.history.reports
        assert report is not None
        assert report.map is not None

    def test_float32_precision(self, tiny_config):
        result = train([_labeled("a")], tiny_config, _run(precision="float32"))
        assert result.params.dtype == np.float32

    def test_mixed_kinds(self, tiny_config):
        dataset = [_labeled("a"), _labeled("b", kind=DatasetKind.DEFOG)]
        with pytest.raises(MixedDatasetKindError):
            train(dataset, tiny_config, _run())

    def test_empty_dataset(self, tiny_config):
        with pytest.raises(EmptyDatasetError):
            train([], tiny_config, _run())

    def test_everything_masked(self, tiny_config):
        record = build_record(16, kind=DatasetKind.DEFOG, validity=np.zeros((16, 2), dtype=np.int8))
        with pytest.raises(EmptyDatasetError):
            train([record], tiny_config, _run())



SMALL_MODEL = {
    "block_size": 256,
    "patch_size": 16,
    "model_dim": 16,
    "num_heads": 2,
    "num_encoder_layers": 1,
    "first_dropout": 0.0,
    "encoder_dropout": 0.0,
    "mha_dropout": 0.0,
}


def _synthetic(n: int, first_seed: int, **overrides) -> list[TimeSeriesRecord]:
    return [
        generate_series(SynthConfig.build(seed=seed, duration_s=60.0, **overrides), record_id=f"s{seed:04d}")
        for seed in range(first_seed, first_seed + n)
    ]


@pytest.mark.slow
class TestLearnsSyntheticData:
    def test_overfits_training_records(self):
        dataset = _synthetic(8, first_seed=0)
        config = ModelConfig.build(**SMALL_MODEL)

        result = train(dataset, config, _run(batch_size=8, steps_per_epoch=300, warmup_steps=20, peak_lr=3e-3))

        losses = result.history.losses
        assert np.mean(losses[-10:]) < 0.1 * losses[0]
        assert evaluate(dataset, result.params).map >= 0.90

    def test_generalizes_to_held_out_records(self):
        training = _synthetic(64, first_seed=0, turn_artifact=True, standing_prelude=True)
        held_out = _synthetic(16, first_seed=1000, turn_artifact=True, standing_prelude=True)
        config = ModelConfig.build(**SMALL_MODEL)

        result = train(training, config, _run(batch_size=8, steps_per_epoch=1000, warmup_steps=50, peak_lr=3e-3))

        assert evaluate(held_out, result.params).map >= 0.70


def test_split_validation_holds_out_last_ids():
    records = [build_record(8, record_id=name) for name in ("c", "a", "e", "b", "d")]
    kept, held = split_validation(records, 0.4)
    assert [r.id for r in kept] == ["a", "b", "c"]
    assert [r.id for r in held] == ["d", "e"]


def test_split_validation_keeps_one_for_training():
    kept, held = split_validation([build_record(8, record_id="only")], 0.9)
    assert len(kept) == 1 and held == []


class TestCrossValidate:
    def test_every_record_scored_once(self, tiny_config):
        dataset = [_labeled(f"r{i}", seed=i) for i in range(3)]
        folds = cross_validate(dataset, tiny_config, _run(steps_per_epoch=1), folds=3)

        assert [f.held_out_ids for f in folds] == [["r0"], ["r1"], ["r2"]]
        assert all(f.report is not None for f in folds)

    @pytest.mark.parametrize("folds", [1, 4])
    def test_fold_count_checked(self, tiny_config, folds: int):
        dataset = [_labeled(f"r{i}", seed=i) for i in range(3)]
        with pytest.raises(ConfigInvalidError):
            cross_validate(dataset, tiny_config, _run(), folds=folds)

    def test_single_fold_rejected_in_config(self):
        with pytest.raises(ConfigInvalidError):
            _run(folds=1)
