"""Shadow-specific training augmentations.

All three shadow augmentations exploit the invertible photometric model
(shadowed = free * (1 - strength*(1-tint_c)*mask)): intensity rescales the
strength and recomposites from the shadow-free image, dropping recomposites
without one object's mask, and grading applies a monotone tone curve only
inside the soft mask.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..world.spec import SceneSample, SceneSpec, flip_scene_spec
from ..world.render import shadow_darkening


class AugmentationError(ValueError):
    pass


# identity curve: straight line through four evenly spaced points
IDENTITY_CURVE = ((0.0, 0.0), (1.0 / 3.0, 1.0 / 3.0), (2.0 / 3.0, 2.0 / 3.0), (1.0, 1.0))


@dataclass(frozen=True)
class AugmentationParams:
    """Configuration block for training-time augmentation.

    curve_control_points holds one 4-point monotone curve per RGB channel;
    endpoints are pinned at (0,0) and (1,1).
    """

    intensity_range: tuple[float, float] = (0.4, 1.2)
    curve_control_points: tuple[tuple[tuple[float, float], ...], ...] = (
        IDENTITY_CURVE,
        IDENTITY_CURVE,
        IDENTITY_CURVE,
    )
    p_drop: float = 0.2
    p_flip: float = 0.5

    def __post_init__(self):
        k_min, k_max = self.intensity_range
        if not (0.0 <= k_min <= k_max <= 1.5):
            raise AugmentationError(
                f"intensity_range must satisfy 0 <= k_min <= k_max <= 1.5, got {self.intensity_range}"
            )
        if len(self.curve_control_points) != 3:
            raise AugmentationError("need one curve per RGB channel")
        for pts in self.curve_control_points:
            validate_curve(pts)
        for name, p in (("p_drop", self.p_drop), ("p_flip", self.p_flip)):
            if not 0.0 <= p <= 1.0:
                raise AugmentationError(f"{name} must be in [0,1], got {p}")


def validate_curve(points) -> None:
    pts = [tuple(p) for p in points]
    if len(pts) != 4:
        raise AugmentationError(f"curve needs exactly 4 control points, got {len(pts)}")
    if pts[0] != (0.0, 0.0) or pts[-1] != (1.0, 1.0):
        raise AugmentationError("curve endpoints must be (0,0) and (1,1)")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    if any(x1 - x0 <= 0 for x0, x1 in zip(xs, xs[1:])):
        raise AugmentationError("curve control points must be strictly increasing in x")
    if any(y1 - y0 < 0 for y0, y1 in zip(ys, ys[1:])):
        raise AugmentationError("curve control points must be monotone in y")
    for x, y in pts:
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise AugmentationError("curve control points must lie in [0,1]^2")


def eval_curve(points, values: np.ndarray) -> np.ndarray:
    """Catmull-Rom-style piecewise cubic through the control points.

    Hermite segments with centered-difference tangents (one-sided at the
    ends), evaluated at x=values; output clamped to [0,1].
    """
    pts = np.asarray(points, dtype=np.float64)
    xs, ys = pts[:, 0], pts[:, 1]
    n = len(xs)
    tangents = np.empty(n)
    tangents[0] = (ys[1] - ys[0]) / (xs[1] - xs[0])
    tangents[-1] = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    for i in range(1, n - 1):
        tangents[i] = (ys[i + 1] - ys[i - 1]) / (xs[i + 1] - xs[i - 1])

    v = np.clip(values, 0.0, 1.0)
    seg = np.clip(np.searchsorted(xs, v, side="right") - 1, 0, n - 2)
    x0, x1 = xs[seg], xs[seg + 1]
    y0, y1 = ys[seg], ys[seg + 1]
    m0, m1 = tangents[seg], tangents[seg + 1]
    h = x1 - x0
    t = (v - x0) / h
    t2 = t * t
    t3 = t2 * t
    out = (
        (2 * t3 - 3 * t2 + 1) * y0
        + (t3 - 2 * t2 + t) * h * m0
        + (-2 * t3 + 3 * t2) * y1
        + (t3 - t2) * h * m1
    )
    return np.clip(out, 0.0, 1.0)


def _recomposite(sample: SceneSample, new_spec: SceneSpec) -> np.ndarray:
    """Shadowed image implied by the sample's free image + current shadow
    masks under new_spec's light."""
    union = sample.shadow_union()
    return np.clip(
        sample.image_shadowfree * shadow_darkening(union, new_spec.light), 0.0, 1.0
    )


def augment_intensity(sample: SceneSample, k: float) -> SceneSample:
    """Rescale shadow strength to k*strength and recomposite."""
    if k < 0:
        raise AugmentationError(f"intensity factor must be >= 0, got {k}")
    light = sample.spec.light
    new_strength = min(k * light.shadow_strength, 1.0)
    new_spec = replace(sample.spec, light=replace(light, shadow_strength=new_strength))
    return SceneSample(
        image_shadowed=_recomposite(sample, new_spec),
        image_shadowfree=sample.image_shadowfree.copy(),
        object_masks=[m.copy() for m in sample.object_masks],
        shadow_masks=[m.copy() for m in sample.shadow_masks],
        spec=new_spec,
        annotation=sample.annotation,
    )


def augment_color_curve(sample: SceneSample, curves) -> SceneSample:
    """Apply per-channel tone curves inside the soft shadow mask.

    Pixels are blended by mask value: out = (1-m)*orig + m*curve(orig).
    The sample's spec is unchanged; curve grading is a photometric-only edit.
    """
    for pts in curves:
        validate_curve(pts)
    union = sample.shadow_union()
    img = sample.image_shadowed
    m = union[:, :, None]
    graded = np.stack(
        [eval_curve(curves[c], img[:, :, c]) for c in range(3)], axis=-1
    )
    out = (1.0 - m) * img + m * graded
    return SceneSample(
        image_shadowed=np.clip(out, 0.0, 1.0),
        image_shadowfree=sample.image_shadowfree.copy(),
        object_masks=[mm.copy() for mm in sample.object_masks],
        shadow_masks=[mm.copy() for mm in sample.shadow_masks],
        spec=sample.spec,
        annotation=sample.annotation,
    )


def augment_shadow_drop(sample: SceneSample, object_index: int) -> SceneSample:
    """Remove one object's shadow, exactly as if it never cast one."""
    if sample.annotation != "full":
        raise AugmentationError("shadow dropping needs full annotation")
    if not 0 <= object_index < len(sample.shadow_masks):
        raise AugmentationError(f"object_index {object_index} out of range")
    new_objects = list(sample.spec.objects)
    new_objects[object_index] = replace(new_objects[object_index], casts_shadow=False)
    new_spec = replace(sample.spec, objects=tuple(new_objects))
    h, w = sample.resolution
    new_shadow_masks = [m.copy() for m in sample.shadow_masks]
    new_shadow_masks[object_index] = np.zeros((h, w), dtype=np.float64)
    dropped = SceneSample(
        image_shadowed=sample.image_shadowed.copy(),
        image_shadowfree=sample.image_shadowfree.copy(),
        object_masks=[m.copy() for m in sample.object_masks],
        shadow_masks=new_shadow_masks,
        spec=new_spec,
        annotation=sample.annotation,
    )
    dropped.image_shadowed = _recomposite(dropped, new_spec)
    return dropped


def flip_horizontal(sample: SceneSample) -> SceneSample:
    """Mirror all rasters about the vertical axis; the spec is mirrored so
    the flipped sample is itself a valid render."""
    return SceneSample(
        image_shadowed=sample.image_shadowed[:, ::-1].copy(),
        image_shadowfree=sample.image_shadowfree[:, ::-1].copy(),
        object_masks=[m[:, ::-1].copy() for m in sample.object_masks],
        shadow_masks=[m[:, ::-1].copy() for m in sample.shadow_masks],
        spec=flip_scene_spec(sample.spec),
        annotation=sample.annotation,
    )
