"""
Run Configuration Files ⚙️

A run configuration is a flat text file of `key = value` lines. `#` starts a
comment, blank lines are ignored. The same key set is shared by every command;
each command declares the subset it requires. Every key is also accepted as a
`--key value` command-line flag, and flags override the file.

---
DESIGN:
- Values stay strings here. Typing and range checks belong to the pydantic
  schemas that consume them (see `app.schemas`), so one error path reports
  the offending key.
- Parsed line by line rather than with python-dotenv: dotenv keeps the last of
  two equal keys and only treats ` #` as a comment, while a run file must
  reject duplicates by line number and cut `#` anywhere. The `.env` loader in
  `app.config` does use dotenv.
"""

from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Final

from app.exceptions import ConfigError

# Every accepted key with a one-line description (used for --help).
SETTING_KEYS: Final[Mapping[str, str]] = {
    # Shared
    "kind": "dataset dialect: tdcsfog or defog",
    "seed": "RNG seed for initialization, shuffling, dropout and synthesis",
    "threads": "worker threads for the parallel paths (1 = deterministic reference path)",
    "precision": "training precision: float64 or float32",
    # Model architecture
    "block_size": "samples per input block",
    "patch_size": "samples per patch (model output resolution)",
    "model_dim": "embedding width D",
    "num_heads": "attention heads",
    "num_encoder_layers": "transformer encoder layers",
    "ffn_dim": "feed-forward inner width (default 2*D)",
    "lstm_hidden": "Bi-LSTM hidden width per direction (default D/2)",
    "first_dropout": "dropout rate on the embedded input",
    "encoder_dropout": "dropout rate on encoder residual branches",
    "mha_dropout": "dropout rate on attention weights",
    "post_norm": "true for post-norm encoder layers, false for pre-norm",
    # Training run
    "batch_size": "blocks per optimizer step",
    "steps_per_epoch": "optimizer steps per epoch",
    "epochs": "number of epochs",
    "block_stride": "stride between training blocks (default block_size)",
    "peak_lr": "learning rate after warm-up",
    "warmup_steps": "linear warm-up length in steps",
    "cosine_decay": "decay the learning rate with a half cosine after warm-up",
    "beta1": "Adam first-moment decay",
    "beta2": "Adam second-moment decay",
    "adam_eps": "Adam denominator epsilon",
    "loss_eps": "prediction clip for the BCE loss",
    "mask_floor": "minimum total mask weight of a batch",
    "validation_fraction": "fraction of records (last by id) held out for per-epoch metrics",
    "folds": "k for k-fold cross-validation (0 = single split)",
    # Scoring
    "threshold": "decision threshold for confusion metrics",
    # Synthetic data
    "duration_s": "seconds per synthetic recording",
    "gait_freq_hz": "dominant frequency of normal walking",
    "freeze_low_hz": "lower edge of the freeze trembling band",
    "freeze_high_hz": "upper edge of the freeze trembling band",
    "event_mix_start_hesitation": "probability that an episode is a start hesitation",
    "event_mix_turn": "probability that an episode is a turn",
    "event_mix_walking": "probability that an episode happens while walking",
    "mean_episode_s": "mean episode duration",
    "min_episode_s": "shortest episode duration",
    "max_episode_s": "episode duration cap",
    "mean_gap_s": "mean walking time between episodes",
    "noise_std": "additive Gaussian noise (m/s^2)",
    "turn_artifact": "add a slow rotation on AccML during turn episodes",
    "standing_prelude": "stand still before start-hesitation episodes",
}

RunSettings = dict[str, str]


def parse_settings(text: str, source: str = "<config>") -> RunSettings:
    """
    Parse `key = value` lines into a flat mapping.

    Args:
        text: File contents.
        source: Name used in error messages.

    Returns:
        Mapping of key to raw string value.

    Raises:
        ConfigError: On a line without '=', an unknown key or a duplicate key.
    """
    settings: RunSettings = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got '{raw_line.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SETTING_KEYS:
            raise ConfigError(f"{source}:{number}: unknown key '{key}'")
        if key in settings:
            raise ConfigError(f"{source}:{number}: duplicate key '{key}'")
        settings[key] = value
    return settings


def load_settings(path: Path) -> RunSettings:
    """Read and parse a run configuration file."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror or e}") from e
    return parse_settings(text, source=str(path))


def resolve_settings(
    config_path: Path | None,
    overrides: Mapping[str, str | None],
    required: Iterable[str] = (),
) -> RunSettings:
    """
    Merge a config file with command-line overrides and check required keys.

    Args:
        config_path: Optional config file.
        overrides: Flag values; None means the flag was not given.
        required: Keys the calling command cannot run without.

    Returns:
        The resolved flat settings.

    Raises:
        ConfigError: If a required key is missing after merging (the key is named).
    """
    settings = load_settings(config_path) if config_path is not None else {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in SETTING_KEYS:
            raise ConfigError(f"unknown key '{key}'")
        settings[key] = value

    for key in required:
        if key not in settings or settings[key] == "":
            raise ConfigError(f"missing required config key '{key}'")
    return settings


def render_settings(settings: Mapping[str, object]) -> str:
    """Render settings back to the file format, keys in declaration order."""
    ordered = [key for key in SETTING_KEYS if key in settings]
    return "".join(f"{key} = {settings[key]}\n" for key in ordered)
