import json
import shutil
from pathlib import Path

import pytest

from app.cli import main
from app.repositories import read_synth_manifest

TINY_FLAGS = [
    "--block-size", "32",
    "--patch-size", "8",
    "--model-dim", "8",
    "--num-heads", "2",
    "--num-encoder-layers", "1",
    "--lstm-hidden", "4",
    "--ffn-dim", "16",
]  # fmt: skip
TRAIN_FLAGS = ["--steps-per-epoch", "2", "--batch-size", "2", "--warmup-steps", "1", "--seed", "3"]


def _synth(out_dir: Path, n: int = 3, kind: str = "tdcsfog", duration: str = "60") -> int:
    return main(["synth", "--out-dir", str(out_dir), "--n", str(n), "--kind", kind, "--duration-s", duration])


@pytest.fixture(scope="module")
def trained(tmp_path_factory: pytest.TempPathFactory) -> tuple[Path, Path]:
    """A synthetic tdcsfog directory and the output directory of a short training run on it."""
    root = tmp_path_factory.mktemp("run")
    assert _synth(root / "data") == 0
    out = root / "out"
    code = main(
        ["train", "--data-dir", str(root / "data" / "tdcsfog"), "--out-dir", str(out), "--kind", "tdcsfog"]
        + TINY_FLAGS
        + TRAIN_FLAGS
    )
    assert code == 0
    return root / "data" / "tdcsfog", out


class TestSynth:
    def test_writes_recordings_and_manifest(self, tmp_path: Path):
        assert _synth(tmp_path, n=4, duration="10") == 0

        assert sorted(p.name for p in (tmp_path / "tdcsfog").iterdir()) == [f"tdcsfog_000{i}.csv" for i in range(4)]
        assert len(read_synth_manifest(tmp_path / "manifest.csv")) == 4
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["settings"]["kind"] == "tdcsfog"
        assert manifest["artifacts"] == {"synth_manifest": "manifest.csv"}

    def test_config_file_with_flag_override(self, tmp_path: Path):
        config = tmp_path / "run.cfg"
        config.write_text("# synthetic defog\nkind = defog\nduration_s = 30\nseed = 4\n")

        code = main(["synth", "--config", str(config), "--out-dir", str(tmp_path / "out"), "--n", "1", "--seed", "5"])

        assert code == 0
        (entry,) = read_synth_manifest(tmp_path / "out" / "manifest.csv")
        assert entry.kind == "defog"
        manifest = json.loads((tmp_path / "out" / "run_manifest.json").read_text())
        assert manifest["seed"] == 5

    def test_unwritable_out_dir(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert _synth(blocker / "out", n=1, duration="5") == 3
        assert "fogdetect synth:" in capsys.readouterr().err

    def test_event_mix_must_sum_to_one(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        code = main(["synth", "--out-dir", str(tmp_path), "--n", "1", "--kind", "tdcsfog", "--event-mix-turn", "0.5"])
        assert code == 2
        assert "event_mix" in capsys.readouterr().err

    def test_missing_kind(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        assert main(["synth", "--out-dir", str(tmp_path), "--n", "1"]) == 2
        assert "missing required config key 'kind'" in capsys.readouterr().err

    def test_unknown_key_in_config(self, tmp_path: Path):
        config = tmp_path / "run.cfg"
        config.write_text("kind = tdcsfog\nlearning_rate = 0.1\n")
        assert main(["synth", "--config", str(config), "--out-dir", str(tmp_path), "--n", "1"]) == 2

    def test_zero_recordings(self, tmp_path: Path):
        assert _synth(tmp_path, n=0) == 0
        assert read_synth_manifest(tmp_path / "manifest.csv") == []


class TestTrain:
    def test_artifacts(self, trained):
        _, out = trained
        for name in ("checkpoint.fogckpt", "history.csv", "epoch_metrics.csv", "run_manifest.json"):
            assert (out / name).is_file()
        assert (out / "history.csv").read_text().splitlines()[0] == "step,epoch,lr,loss"
        assert len((out / "history.csv").read_text().splitlines()) == 3
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["artifacts"]["checkpoint"] == "checkpoint.fogckpt"
        assert manifest["rng_algorithm"] == "philox4x64"

    def test_same_seed_same_checkpoint(self, trained, tmp_path: Path):
        data_dir, out = trained
        again = tmp_path / "again"
        args = ["train", "--data-dir", str(data_dir), "--out-dir", str(again), "--kind", "tdcsfog"]
        assert main(args + TINY_FLAGS + TRAIN_FLAGS) == 0
        assert (again / "checkpoint.fogckpt").read_bytes() == (out / "checkpoint.fogckpt").read_bytes()
        assert (again / "history.csv").read_bytes() == (out / "history.csv").read_bytes()

    def test_mixed_kinds(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        assert _synth(tmp_path / "a", n=1, duration="10") == 0
        assert _synth(tmp_path / "b", n=1, kind="defog", duration="10") == 0
        shutil.copy(tmp_path / "b" / "defog" / "defog_0000.csv", tmp_path / "a" / "tdcsfog")

        args = ["train", "--data-dir", str(tmp_path / "a" / "tdcsfog"), "--out-dir", str(tmp_path / "out")]
        code = main(args + ["--kind", "tdcsfog"] + TINY_FLAGS + TRAIN_FLAGS)

        assert code == 4
        assert "MixedDatasetKindError" in capsys.readouterr().err

    def test_missing_data_dir(self, tmp_path: Path):
        args = ["train", "--data-dir", str(tmp_path / "nope"), "--out-dir", str(tmp_path / "out")]
        assert main(args + ["--kind", "tdcsfog"]) == 3

    def test_dump_blocks(self, trained, tmp_path: Path):
        data_dir, _ = trained
        out = tmp_path / "dump"
        args = ["train", "--data-dir", str(data_dir), "--out-dir", str(out), "--kind", "tdcsfog", "--dump-blocks"]
        assert main(args + TINY_FLAGS + TRAIN_FLAGS + ["--steps-per-epoch", "1"]) == 0
        header = (out / "blocks.csv").read_text().splitlines()[0]
        assert header == "record_id,block_start,patch_index,start_hesitation,turn,walking,mask"


class TestEvalAndPredict:
    def test_eval_writes_metrics(self, trained, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        data_dir, out = trained
        code = main(
            ["eval", "--checkpoint", str(out / "checkpoint.fogckpt"), "--data-dir", str(data_dir)]
            + ["--out-dir", str(tmp_path)]
        )

        assert code == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["threshold"] == 0.5
        assert 0.0 <= metrics["map"] <= 1.0
        assert "mAP" in capsys.readouterr().out

    def test_patch_size_mismatch(self, trained, capsys: pytest.CaptureFixture[str]):
        data_dir, out = trained
        args = ["eval", "--checkpoint", str(out / "checkpoint.fogckpt"), "--data-dir", str(data_dir)]
        assert main(args + ["--patch-size", "4"]) == 5
        assert "patch_size" in capsys.readouterr().err

    def test_matching_architecture_flags_are_accepted(self, trained):
        data_dir, out = trained
        args = ["eval", "--checkpoint", str(out / "checkpoint.fogckpt"), "--data-dir", str(data_dir)]
        assert main(args + ["--patch-size", "8"]) == 0

    def test_kind_mismatch(self, trained):
        data_dir, out = trained
        args = ["eval", "--checkpoint", str(out / "checkpoint.fogckpt"), "--data-dir", str(data_dir)]
        assert main(args + ["--kind", "defog"]) == 5

    def test_bad_checkpoint(self, trained, tmp_path: Path):
        data_dir, _ = trained
        bogus = tmp_path / "bogus.fogckpt"
        bogus.write_bytes(b"not a checkpoint")
        assert main(["eval", "--checkpoint", str(bogus), "--data-dir", str(data_dir)]) != 0

    def test_predict_then_rescore(self, trained, tmp_path: Path):
        data_dir, out = trained
        checkpoint = str(out / "checkpoint.fogckpt")
        recording = data_dir / "tdcsfog_0000.csv"
        single = tmp_path / "single"
        single.mkdir()
        shutil.copy(recording, single)

        predict = ["predict", "--checkpoint", checkpoint, "--input", str(recording)]
        assert main(predict + ["--output", str(tmp_path / "p.csv")]) == 0
        rows = (tmp_path / "p.csv").read_text().splitlines()
        assert rows[0] == "patch_start_time,start_hesitation,turn,walking"
        assert len(rows) == 1 + 7680 // 8

        rescore = ["eval", "--checkpoint", checkpoint, "--predictions", str(tmp_path / "p.csv")]
        assert main(rescore + ["--input", str(recording), "--out-dir", str(tmp_path / "rescored")]) == 0
        direct = ["eval", "--checkpoint", checkpoint, "--data-dir", str(single)]
        assert main(direct + ["--out-dir", str(tmp_path / "direct")]) == 0

        rescored = json.loads((tmp_path / "rescored" / "metrics.json").read_text())
        assert rescored == json.loads((tmp_path / "direct" / "metrics.json").read_text())

    def test_predictions_need_input(self, trained, tmp_path: Path):
        _, out = trained
        args = ["eval", "--checkpoint", str(out / "checkpoint.fogckpt"), "--predictions", str(tmp_path / "p.csv")]
        assert main(args) == 2


def test_inspect(trained, capsys: pytest.CaptureFixture[str]):
    data_dir, _ = trained
    assert main(["inspect", "--data-dir", str(data_dir)]) == 0
    out = capsys.readouterr().out
    assert "records: 3" in out
    assert "median dominant frequency in episodes" in out


def test_log_level_flag(trained, capsys: pytest.CaptureFixture[str]):
    data_dir, _ = trained
    assert main(["--log-level", "warning", "inspect", "--data-dir", str(data_dir)]) == 0
    assert "records: 3" in capsys.readouterr().out
    with pytest.raises(SystemExit) as info:
        main(["--log-level", "loud", "inspect", "--data-dir", str(data_dir)])
    assert info.value.code == 2
