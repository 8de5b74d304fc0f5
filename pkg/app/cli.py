"""
Command-Line Entry Point 🚪

    fogdetect synth    --out-dir DIR --n N          synthetic recordings + manifest
    fogdetect train    --data-dir DIR --out-dir DIR checkpoint, history, metrics
    fogdetect eval     --checkpoint F --data-dir DIR metrics report
    fogdetect predict  --checkpoint F --input CSV --output CSV
    fogdetect inspect  --data-dir DIR               event and episode statistics

Every run-configuration key is accepted as `--key value` (or `--key-name value`)
and overrides the value from `--config FILE`.
`--log-level LEVEL` before the command overrides FOGDETECT_LOG_LEVEL.

---
EXIT CODES:
0 success, 2 configuration error, 3 data or I/O error, 4 runtime failure,
5 checkpoint/configuration mismatch. Diagnostics go to standard error.
"""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app import __version__
from app.config import (
    SETTING_KEYS,
    RunSettings,
    get_default_threshold,
    get_threads,
    load_env_files,
    resolve_settings,
    setup_logging,
)
from app.exceptions import ConfigInvalidError, ConfigMismatchError, FogDetectError, MixedDatasetKindError
from app.models import DatasetKind, TimeSeriesRecord
from app.repositories import (
    CHECKPOINT,
    ArtifactWriter,
    Checkpoint,
    load_checkpoint,
    load_dataset,
    read_predictions,
    read_series,
    save_checkpoint,
    write_predictions,
)
from app.schemas import ModelConfig, RunManifest, SynthConfig, TrainRunConfig
from app.services.evaluation import evaluate, patch_start_times, predict_record, score_prediction_file
from app.services.inspection import dataset_statistics, format_statistics
from app.services.preprocess import prepare_blocks
from app.services.synth import generate_dataset
from app.services.training import cross_validate, train

logger = logging.getLogger("fogdetect")


# --- 1. SETTINGS ---


def _overrides(args: argparse.Namespace) -> dict[str, str | None]:
    return {key: getattr(args, key, None) for key in SETTING_KEYS}


def _resolve(args: argparse.Namespace, required: Sequence[str] = ()) -> RunSettings:
    return resolve_settings(args.config, _overrides(args), required)


def _typed(settings: RunSettings, key: str, cast: Callable[[str], Any], default: Any) -> Any:
    if key not in settings:
        return default
    try:
        return cast(settings[key])
    except ValueError as e:
        raise ConfigInvalidError(key, f"cannot parse '{settings[key]}'") from e


def _kind(settings: RunSettings, default: DatasetKind | None = None) -> DatasetKind:
    kind = _typed(settings, "kind", DatasetKind, default)
    if kind is None:
        raise ConfigInvalidError("kind", "missing required config key 'kind'")
    return kind


def _threads(settings: RunSettings) -> int:
    threads = _typed(settings, "threads", int, None)
    if threads is None:
        return get_threads()
    if threads < 1:
        raise ConfigInvalidError("threads", f"must be >= 1, got {threads}")
    return threads


def _threshold(settings: RunSettings) -> float:
    threshold = _typed(settings, "threshold", float, None)
    return get_default_threshold() if threshold is None else threshold


def _manifest(command: str, args: argparse.Namespace, settings: RunSettings, seed: int) -> RunManifest:
    return RunManifest(
        command=command,
        config_path=str(args.config) if args.config is not None else None,
        settings=dict(settings),
        seed=seed,
        tool_version=__version__,
    )


def _compatible_config(checkpoint: Checkpoint, settings: RunSettings) -> ModelConfig:
    """The checkpoint's configuration, after checking any architecture keys the run also sets."""
    stored = checkpoint.params.config
    given = {key: value for key, value in settings.items() if key in ModelConfig.model_fields}
    if not given:
        return stored
    requested = ModelConfig.from_settings({**stored.to_settings(), **given})
    for key in given:
        if getattr(requested, key) != getattr(stored, key):
            raise ConfigMismatchError(key, getattr(stored, key), getattr(requested, key))
    checkpoint.params.check_compatible(requested)
    return requested


def _checkpoint_kind(settings: RunSettings, checkpoint: Checkpoint) -> DatasetKind:
    kind = _kind(settings, default=checkpoint.kind)
    if kind != checkpoint.kind:
        raise ConfigMismatchError("kind", checkpoint.kind.value, kind.value)
    return kind


def _check_kinds(records: Sequence[TimeSeriesRecord], kind: DatasetKind) -> None:
    kinds = {record.kind.value for record in records} | {kind.value}
    if len(kinds) > 1:
        raise MixedDatasetKindError(sorted(kinds))


# --- 2. COMMANDS ---


def cmd_synth(args: argparse.Namespace) -> int:
    settings = _resolve(args, required=("kind",))
    config = SynthConfig.from_settings(settings)
    writer = ArtifactWriter(args.out_dir)
    manifest = _manifest("synth", args, settings, config.seed)
    writer.write_manifest(manifest)

    entries = generate_dataset(config, args.n, args.out_dir, threads=_threads(settings))
    writer.record("synth_manifest", "manifest.csv")
    writer.write_manifest(manifest.model_copy(update={"artifacts": dict(writer.written)}))
    print(f"wrote {len(entries)} {config.kind.value} recording(s) to {args.out_dir / config.kind.value}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    settings = _resolve(args, required=("kind",))
    kind = _kind(settings)
    model_config = ModelConfig.from_settings(settings)
    run_config = TrainRunConfig.from_settings(settings)
    threshold = _threshold(settings)
    writer = ArtifactWriter(args.out_dir)
    manifest = _manifest("train", args, settings, run_config.seed)
    writer.write_manifest(manifest)

    records = load_dataset(args.data_dir, kind, threads=run_config.threads)
    _check_kinds(records, kind)

    if args.dump_blocks:
        writer.write_block_dump(prepare_blocks(records, model_config, run_config.block_stride, drop_unmasked=False))

    if run_config.folds:
        for result in cross_validate(records, model_config, run_config, threshold=threshold):
            print(f"fold {result.fold}: held out {', '.join(result.held_out_ids)}")
            if result.report is None:
                print("  no defined metrics")
                continue
            writer.write_metrics(result.report, prefix=f"fold{result.fold}_")
            print(result.report.render_table())
    else:
        trained = train(records, model_config, run_config, threshold=threshold)
        save_checkpoint(writer.path(CHECKPOINT), trained.params, run_config.seed, kind)
        writer.record("checkpoint", CHECKPOINT)
        writer.write_history(trained.history.steps)
        writer.write_epoch_metrics(trained.history.epochs)

        final = trained.history.reports[-1] if trained.history.reports else None
        if final is not None:
            writer.write_metrics(final)
            print(final.render_table())
        else:
            last = trained.history.epochs[-1]
            print(f"epoch {last.epoch}: mean loss {last.mean_loss:.6f} (no held-out metrics)")

    writer.write_manifest(manifest.model_copy(update={"artifacts": dict(writer.written)}))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    settings = _resolve(args)
    checkpoint = load_checkpoint(args.checkpoint)
    config = _compatible_config(checkpoint, settings)
    kind = _checkpoint_kind(settings, checkpoint)
    threshold = _threshold(settings)
    writer = ArtifactWriter(args.out_dir) if args.out_dir is not None else None
    manifest = _manifest("eval", args, settings, checkpoint.seed)
    if writer is not None:
        writer.write_manifest(manifest)

    if args.predictions is not None:
        if args.input is None:
            raise ConfigInvalidError("input", "--predictions needs the labeled recording as --input")
        record = read_series(args.input, kind, sniff=True)
        times, confidences = read_predictions(args.predictions)
        report = score_prediction_file(record, times, confidences, config, threshold=threshold, ties=args.ties)
    else:
        if args.data_dir is None:
            raise ConfigInvalidError("data_dir", "eval needs --data-dir (or --predictions with --input)")
        threads = _threads(settings)
        records = load_dataset(args.data_dir, kind, threads=threads)
        report = evaluate(
            records, checkpoint.params, config, threshold=threshold, ties=args.ties, kind=kind, threads=threads
        )

    print(report.render_table())
    if writer is not None:
        writer.write_metrics(report)
        writer.write_manifest(manifest.model_copy(update={"artifacts": dict(writer.written)}))
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    settings = _resolve(args)
    checkpoint = load_checkpoint(args.checkpoint)
    config = _compatible_config(checkpoint, settings)
    kind = _checkpoint_kind(settings, checkpoint)

    record = read_series(args.input, kind, sniff=True)
    if record.kind != kind:
        raise ConfigMismatchError("kind", kind.value, record.kind.value)
    stitched = predict_record(record, checkpoint.params, config)
    times = patch_start_times(record, config.patch_size)
    write_predictions(args.output, times, stitched.confidences[: times.size])
    print(f"wrote {times.size} patch prediction(s) to {args.output}")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    settings = _resolve(args)
    kind = _kind(settings, default=DatasetKind.TDCSFOG)
    records = load_dataset(args.data_dir, kind, threads=_threads(settings))
    print(format_statistics(dataset_statistics(records)))
    return 0


# --- 3. PARSER ---


def _settings_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, default=None, help="run configuration file (key = value lines)")
    group = parent.add_argument_group("run configuration keys (override --config)")
    for key, description in SETTING_KEYS.items():
        names = [f"--{key}"]
        if "_" in key:
            names.append(f"--{key.replace('_', '-')}")
        group.add_argument(*names, dest=key, default=None, metavar="VALUE", help=description)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fogdetect", description="Freezing-of-gait event detection")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        type=str.upper,
        default=None,
        help="application log level (overrides FOGDETECT_LOG_LEVEL)",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    parent = _settings_parent()

    synth = commands.add_parser("synth", parents=[parent], help="generate synthetic labeled recordings")
    synth.add_argument("--out-dir", type=Path, required=True)
    synth.add_argument("--n", type=int, required=True, help="number of recordings")
    synth.set_defaults(handler=cmd_synth)

    train_cmd = commands.add_parser("train", parents=[parent], help="train a model")
    train_cmd.add_argument("--data-dir", type=Path, required=True)
    train_cmd.add_argument("--out-dir", type=Path, required=True)
    train_cmd.add_argument("--dump-blocks", action="store_true", help="also write the training blocks as CSV")
    train_cmd.set_defaults(handler=cmd_train)

    eval_cmd = commands.add_parser("eval", parents=[parent], help="score a checkpoint on labeled recordings")
    eval_cmd.add_argument("--checkpoint", type=Path, required=True)
    eval_cmd.add_argument("--data-dir", type=Path, default=None)
    eval_cmd.add_argument("--out-dir", type=Path, default=None, help="write metrics CSV/JSON here")
    eval_cmd.add_argument("--predictions", type=Path, default=None, help="score a predictions file instead")
    eval_cmd.add_argument("--input", type=Path, default=None, help="labeled recording for --predictions")
    eval_cmd.add_argument("--ties", choices=("index", "grouped"), default="index", help="AP tie handling")
    eval_cmd.set_defaults(handler=cmd_eval)

    predict = commands.add_parser("predict", parents=[parent], help="write per-patch confidences for one file")
    predict.add_argument("--checkpoint", type=Path, required=True)
    predict.add_argument("--input", type=Path, required=True)
    predict.add_argument("--output", type=Path, required=True)
    predict.set_defaults(handler=cmd_predict)

    inspect = commands.add_parser("inspect", parents=[parent], help="print dataset statistics")
    inspect.add_argument("--data-dir", type=Path, required=True)
    inspect.set_defaults(handler=cmd_inspect)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    load_env_files()
    args = build_parser().parse_args(argv)
    if args.log_level:
        setup_logging(args.log_level)
    logger.debug(f"fogdetect {__version__}: {args.command}")
    try:
        return args.handler(args)
    except FogDetectError as e:
        print(f"fogdetect {args.command}: {type(e).__name__}: {e.detail}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"fogdetect {args.command}: invalid configuration: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"fogdetect {args.command}: {e}", file=sys.stderr)
        return 3
