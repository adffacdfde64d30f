"""Training-batch sampling policy and shadow-specific augmentations."""

from .augment import (
    IDENTITY_CURVE,
    AugmentationError,
    AugmentationParams,
    augment_color_curve,
    augment_intensity,
    augment_shadow_drop,
    eval_curve,
    flip_horizontal,
    validate_curve,
)
from .policy import (
    AnalyzerBatch,
    PolicyError,
    PolicySource,
    SamplingPolicy,
    sample_analyzer_batch,
)

__all__ = [
    "IDENTITY_CURVE",
    "AugmentationError",
    "AugmentationParams",
    "augment_color_curve",
    "augment_intensity",
    "augment_shadow_drop",
    "eval_curve",
    "flip_horizontal",
    "validate_curve",
    "AnalyzerBatch",
    "PolicyError",
    "PolicySource",
    "SamplingPolicy",
    "sample_analyzer_batch",
]
