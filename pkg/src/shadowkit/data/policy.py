"""Multi-source batch sampling for analyzer training.

Sources with partial annotation always emit an all-zero object mask and
union-of-shadows targets (the "general shadow" mode); fully annotated
sources pick a random object and zero its mask with probability
p_empty_object_mask, switching targets to union semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..world.spec import SceneSample
from .augment import (
    AugmentationParams,
    augment_color_curve,
    augment_intensity,
    augment_shadow_drop,
    flip_horizontal,
    IDENTITY_CURVE,
)


class PolicyError(ValueError):
    pass


@dataclass
class PolicySource:
    samples: list[SceneSample]
    annotation: str  # "full" | "partial"
    repeat: int = 1

    def __post_init__(self):
        if self.repeat < 1:
            raise PolicyError(f"repeat factor must be >= 1, got {self.repeat}")
        if self.annotation not in ("full", "partial"):
            raise PolicyError(f"unknown annotation level {self.annotation!r}")


@dataclass
class SamplingPolicy:
    sources: list[PolicySource]
    p_empty_object_mask: float = 0.3
    batch_size: int = 16

    def __post_init__(self):
        if not 0.0 <= self.p_empty_object_mask <= 1.0:
            raise PolicyError("p_empty_object_mask must be in [0,1]")
        if self.batch_size < 1:
            raise PolicyError("batch_size must be >= 1")

    def source_weights(self) -> np.ndarray:
        w = np.array(
            [len(s.samples) * s.repeat for s in self.sources], dtype=np.float64
        )
        total = w.sum()
        if total <= 0:
            raise PolicyError("no samples registered in any source")
        return w / total


@dataclass
class AnalyzerBatch:
    """Stacked training tensors, HWC float32 images and HW masks."""

    images: np.ndarray          # (B, H, W, 3)
    object_masks: np.ndarray    # (B, H, W)
    target_images: np.ndarray   # (B, H, W, 3)
    target_masks: np.ndarray    # (B, H, W)


def _maybe_augment(
    sample: SceneSample, params: AugmentationParams, rng: np.random.Generator
) -> SceneSample:
    if rng.random() < params.p_flip:
        sample = flip_horizontal(sample)
    if (
        sample.annotation == "full"
        and len(sample.shadow_masks) > 0
        and rng.random() < params.p_drop
    ):
        idx = int(rng.integers(0, len(sample.shadow_masks)))
        sample = augment_shadow_drop(sample, idx)
    k = float(rng.uniform(*params.intensity_range))
    sample = augment_intensity(sample, k)
    if tuple(params.curve_control_points) != (
        IDENTITY_CURVE,
        IDENTITY_CURVE,
        IDENTITY_CURVE,
    ):
        sample = augment_color_curve(sample, params.curve_control_points)
    return sample


def sample_analyzer_batch(
    policy: SamplingPolicy,
    rng: np.random.Generator,
    augment: AugmentationParams | None = None,
) -> AnalyzerBatch:
    """Draw one training batch according to the policy."""
    if not policy.sources:
        raise PolicyError("policy has no sources")
    weights = policy.source_weights()

    images, obj_masks, tgt_images, tgt_masks = [], [], [], []
    for _ in range(policy.batch_size):
        src_idx = int(rng.choice(len(policy.sources), p=weights))
        source = policy.sources[src_idx]
        sample = source.samples[int(rng.integers(0, len(source.samples)))]
        if augment is not None:
            sample = _maybe_augment(sample, augment, rng)

        h, w = sample.resolution
        if source.annotation == "partial" or not sample.object_masks:
            obj_mask = np.zeros((h, w), dtype=np.float64)
            tgt_mask = sample.shadow_union()
        else:
            obj_idx = int(rng.integers(0, len(sample.object_masks)))
            if rng.random() < policy.p_empty_object_mask:
                obj_mask = np.zeros((h, w), dtype=np.float64)
                tgt_mask = sample.shadow_union()
            else:
                obj_mask = sample.object_masks[obj_idx]
                tgt_mask = sample.shadow_masks[obj_idx]
        images.append(sample.image_shadowed)
        obj_masks.append(obj_mask)
        tgt_images.append(sample.image_shadowfree)
        tgt_masks.append(tgt_mask)

    return AnalyzerBatch(
        images=np.stack(images).astype(np.float32),
        object_masks=np.stack(obj_masks).astype(np.float32),
        target_images=np.stack(tgt_images).astype(np.float32),
        target_masks=np.stack(tgt_masks).astype(np.float32),
    )
