"""Shadow analyzer: joint object-centered shadow detection and removal."""

from .config import AnalyzerConfig, ConfigError, desk_preset, get_preset, paper_preset, tiny_preset
from .features import extract_shadow_features
from .losses import (
    DICE_EPS,
    LossBundle,
    PerceptualFeatures,
    adversarial_d_loss,
    adversarial_g_loss,
    analyzer_loss,
    dice_loss,
    masked_r1,
    perceptual_loss,
)
from .model import AnalyzerNet, AnalyzerOutput, PatchDiscriminator
from .train import (
    AnalyzerTrainOptions,
    AnalyzerTrainResult,
    TrainingDiverged,
    batch_to_tensors,
    load_analyzer,
    train_analyzer,
)

__all__ = [
    "AnalyzerConfig",
    "ConfigError",
    "desk_preset",
    "get_preset",
    "paper_preset",
    "tiny_preset",
    "extract_shadow_features",
    "DICE_EPS",
    "LossBundle",
    "PerceptualFeatures",
    "adversarial_d_loss",
    "adversarial_g_loss",
    "analyzer_loss",
    "dice_loss",
    "masked_r1",
    "perceptual_loss",
    "AnalyzerNet",
    "AnalyzerOutput",
    "PatchDiscriminator",
    "AnalyzerTrainOptions",
    "AnalyzerTrainResult",
    "TrainingDiverged",
    "batch_to_tensors",
    "load_analyzer",
    "train_analyzer",
]
