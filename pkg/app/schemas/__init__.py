from .base import SettingsModel
from .manifest import RunManifest
from .metrics import ClassMetrics, MetricsReport
from .model import ModelConfig
from .synth import SynthConfig
from .training import TrainRunConfig

__all__ = [
    "SettingsModel",
    "ModelConfig",
    "TrainRunConfig",
    "SynthConfig",
    "MetricsReport",
    "ClassMetrics",
    "RunManifest",
]
