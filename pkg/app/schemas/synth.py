"""
Settings of the synthetic recording generator.
"""

from typing import Self

from pydantic import Field, model_validator

from app.config.app import get_default_seed
from app.core.dialects import DialectRegistry
from app.exceptions import ConfigInvalidError
from app.models import DatasetKind

from .base import SettingsModel


class SynthConfig(SettingsModel):
    """
    Signal and episode statistics for synthetic recordings. The default event mix
    mirrors the reported share of freezing episodes per context (turns dominate,
    start hesitations are rare).
    """

    kind: DatasetKind = Field(default=DatasetKind.TDCSFOG, description="Dialect; fixes sampling rate and unit")
    duration_s: float = Field(default=60.0, gt=0.0, description="Seconds per recording")
    gait_freq_hz: float = Field(default=2.0, gt=0.0, description="Dominant frequency of normal walking")
    freeze_low_hz: float = Field(default=6.0, gt=0.0, description="Lower edge of the freeze band")
    freeze_high_hz: float = Field(default=8.0, gt=0.0, description="Upper edge of the freeze band")
    event_mix_start_hesitation: float = Field(default=0.043, ge=0.0, le=1.0)
    event_mix_turn: float = Field(default=0.798, ge=0.0, le=1.0)
    event_mix_walking: float = Field(default=0.159, ge=0.0, le=1.0)
    mean_episode_s: float = Field(default=3.0, gt=0.0, description="Mean episode duration")
    min_episode_s: float = Field(default=1.0, gt=0.0, description="Shortest episode")
    max_episode_s: float = Field(default=10.0, gt=0.0, description="Episode duration cap")
    mean_gap_s: float = Field(default=6.0, gt=0.0, description="Mean walking time between episodes")
    noise_std: float = Field(default=0.2, ge=0.0, description="Additive Gaussian noise in m/s^2")
    turn_artifact: bool = Field(default=False, description="Slow rotation on AccML during turn episodes")
    standing_prelude: bool = Field(default=False, description="Stand still before start-hesitation episodes")
    seed: int = Field(default_factory=get_default_seed, ge=0)

    @model_validator(mode="after")
    def _check_consistency(self) -> Self:
        total = self.event_mix_start_hesitation + self.event_mix_turn + self.event_mix_walking
        if abs(total - 1.0) > 1e-9:
            raise ConfigInvalidError(
                "event_mix",
                f"event_mix_start_hesitation + event_mix_turn + event_mix_walking = {total:.6g}, must be 1",
            )

        nyquist = DialectRegistry.get_dialect(self.kind).sampling_rate_hz / 2.0
        if not self.gait_freq_hz < self.freeze_low_hz:
            raise ConfigInvalidError("gait_freq_hz", "must be below freeze_low_hz")
        if not self.freeze_low_hz < self.freeze_high_hz:
            raise ConfigInvalidError("freeze_low_hz", "must be below freeze_high_hz")
        if not self.freeze_high_hz < nyquist:
            raise ConfigInvalidError("freeze_high_hz", f"must be below the Nyquist frequency {nyquist} Hz")

        if not self.min_episode_s <= self.mean_episode_s <= self.max_episode_s:
            raise ConfigInvalidError("mean_episode_s", "must lie within [min_episode_s, max_episode_s]")
        return self

    @property
    def event_mix(self) -> tuple[float, float, float]:
        """Probabilities in label-channel order (StartHesitation, Turn, Walking)."""
        return (self.event_mix_start_hesitation, self.event_mix_turn, self.event_mix_walking)

    @property
    def sampling_rate_hz(self) -> float:
        return DialectRegistry.get_dialect(self.kind).sampling_rate_hz
