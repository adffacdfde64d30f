"""Domain types for the procedural 2.5D shadow world.

Coordinate conventions: origin top-left, x rightward, y downward, integer
pixel units. A raster pixel (row i, col j) is sampled at the continuous
point (x=j, y=i). Images are H*W*3 float arrays in [0, 1] (sRGB), masks
are H*W float arrays in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SHAPE_KINDS = ("circle", "rectangle", "polygon")
ANNOTATION_LEVELS = ("full", "partial")


class WorldError(ValueError):
    """Invalid scene description."""


class GenerationError(RuntimeError):
    """Scene sampling could not satisfy placement constraints."""


class OutOfFrameError(WorldError):
    """An edit would push an object or its shadow out of the frame."""


@dataclass(frozen=True)
class LightSpec:
    """Directional light: azimuth/elevation plus a photometric shadow model.

    A shadow multiplies the image by 1 - strength * (1 - tint_c) per channel,
    weighted by the soft mask value, so darkening is invertible given the mask.
    """

    azimuth_rad: float
    elevation_rad: float
    shadow_strength: float
    shadow_tint: tuple[float, float, float]
    softness_px: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.azimuth_rad < 2.0 * math.pi:
            raise WorldError(f"azimuth_rad must be in [0, 2*pi), got {self.azimuth_rad}")
        if not 0.0 < self.elevation_rad <= math.pi / 2.0:
            raise WorldError(
                f"elevation_rad must be in (0, pi/2], got {self.elevation_rad}"
            )
        # Strength 0 is allowed so a shadow can be disabled outright
        # (equivalently: shadowed render == shadow-free render).
        if not 0.0 <= self.shadow_strength <= 1.0:
            raise WorldError(
                f"shadow_strength must be in [0, 1], got {self.shadow_strength}"
            )
        if len(self.shadow_tint) != 3:
            raise WorldError("shadow_tint must have 3 components")
        for c in self.shadow_tint:
            if not 0.5 <= c <= 1.0:
                raise WorldError(f"shadow_tint components must be in [0.5, 1], got {c}")
        if self.softness_px < 0.0:
            raise WorldError(f"softness_px must be >= 0, got {self.softness_px}")

    @property
    def direction_xy(self) -> tuple[float, float]:
        """Unit ground-plane direction in which shadows are cast."""
        return (math.cos(self.azimuth_rad), math.sin(self.azimuth_rad))

    def shadow_offset_xy(self, height_px: float) -> tuple[float, float]:
        """Ground displacement of a point at the given height."""
        scale = height_px / math.tan(self.elevation_rad)
        dx, dy = self.direction_xy
        return (dx * scale, dy * scale)


@dataclass(frozen=True)
class ObjectSpec:
    """A flat footprint with an implied vertical extent (the 2.5D model).

    footprint encoding by shape:
      circle:    (cx, cy, r)
      rectangle: (x0, y0, x1, y1) with x0 <= x1, y0 <= y1
      polygon:   (x0, y0, x1, y1, ...) convex, >= 3 vertices
    """

    shape: str
    footprint: tuple[float, ...]
    height_px: float
    albedo: tuple[float, float, float]
    casts_shadow: bool = True

    def __post_init__(self):
        if self.shape not in SHAPE_KINDS:
            raise WorldError(f"unknown shape {self.shape!r}")
        if self.height_px <= 0:
            raise WorldError(f"height_px must be > 0, got {self.height_px}")
        if len(self.albedo) != 3 or any(not 0.0 <= a <= 1.0 for a in self.albedo):
            raise WorldError(f"albedo must be a 3-vector in [0,1], got {self.albedo}")
        fp = self.footprint
        if self.shape == "circle":
            if len(fp) != 3 or fp[2] <= 0:
                raise WorldError("circle footprint must be (cx, cy, r) with r > 0")
        elif self.shape == "rectangle":
            if len(fp) != 4 or fp[2] < fp[0] or fp[3] < fp[1]:
                raise WorldError("rectangle footprint must be (x0, y0, x1, y1)")
        else:
            if len(fp) < 6 or len(fp) % 2 != 0:
                raise WorldError("polygon footprint needs >= 3 (x, y) vertices")

    def vertices(self) -> np.ndarray:
        """Footprint outline as an (n, 2) array of (x, y) points.

        Circles are returned as their center; use the radius separately.
        """
        fp = self.footprint
        if self.shape == "circle":
            return np.array([[fp[0], fp[1]]], dtype=np.float64)
        if self.shape == "rectangle":
            x0, y0, x1, y1 = fp
            return np.array(
                [[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=np.float64
            )
        return np.asarray(fp, dtype=np.float64).reshape(-1, 2)

    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the footprint."""
        if self.shape == "circle":
            cx, cy, r = self.footprint
            return (cx - r, cy - r, cx + r, cy + r)
        v = self.vertices()
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def translated(self, dx: float, dy: float) -> "ObjectSpec":
        fp = self.footprint
        if self.shape == "circle":
            new_fp = (fp[0] + dx, fp[1] + dy, fp[2])
        else:
            new_fp = tuple(
                v + (dx if i % 2 == 0 else dy) for i, v in enumerate(fp)
            )
        return replace(self, footprint=new_fp)

    def mirrored_x(self, width: int) -> "ObjectSpec":
        w1 = width - 1
        fp = self.footprint
        if self.shape == "circle":
            new_fp = (w1 - fp[0], fp[1], fp[2])
        elif self.shape == "rectangle":
            x0, y0, x1, y1 = fp
            new_fp = (w1 - x1, y0, w1 - x0, y1)
        else:
            new_fp = tuple(
                (w1 - v) if i % 2 == 0 else v for i, v in enumerate(fp)
            )
        return replace(self, footprint=new_fp)


@dataclass(frozen=True)
class SceneSpec:
    """Complete description of one renderable scene."""

    resolution: tuple[int, int]  # (H, W)
    ground_albedo: tuple[float, float, float]
    ground_texture_seed: int
    light: LightSpec
    objects: tuple[ObjectSpec, ...]
    # Set by horizontal flips so the regenerated ground texture mirrors
    # exactly instead of re-deriving sample positions.
    ground_flip_x: bool = False

    def __post_init__(self):
        h, w = self.resolution
        if h < 1 or w < 1:
            raise WorldError(f"resolution must be positive, got {self.resolution}")
        if len(self.ground_albedo) != 3 or any(
            not 0.0 <= a <= 1.0 for a in self.ground_albedo
        ):
            raise WorldError("ground_albedo must be a 3-vector in [0,1]")
        if not self.objects:
            raise WorldError("scene needs at least one object")
        if len(self.objects) > 4:
            raise WorldError("scene supports at most 4 objects")
        for obj in self.objects:
            xmin, ymin, xmax, ymax = obj.bounds()
            if xmin < 0 or ymin < 0 or xmax > w - 1 or ymax > h - 1:
                raise WorldError(
                    f"footprint {obj.footprint} outside {w}x{h} frame bounds"
                )
            if obj.height_px > h:
                raise WorldError("object height_px exceeds image height")

    def to_json_dict(self) -> dict:
        return {
            "resolution": list(self.resolution),
            "ground_albedo": list(self.ground_albedo),
            "ground_texture_seed": int(self.ground_texture_seed),
            "ground_flip_x": bool(self.ground_flip_x),
            "light": {
                "azimuth_rad": self.light.azimuth_rad,
                "elevation_rad": self.light.elevation_rad,
                "shadow_strength": self.light.shadow_strength,
                "shadow_tint": list(self.light.shadow_tint),
                "softness_px": self.light.softness_px,
            },
            "objects": [
                {
                    "shape": o.shape,
                    "footprint": list(o.footprint),
                    "height_px": o.height_px,
                    "albedo": list(o.albedo),
                    "casts_shadow": o.casts_shadow,
                }
                for o in self.objects
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SceneSpec":
        light = LightSpec(
            azimuth_rad=d["light"]["azimuth_rad"],
            elevation_rad=d["light"]["elevation_rad"],
            shadow_strength=d["light"]["shadow_strength"],
            shadow_tint=tuple(d["light"]["shadow_tint"]),
            softness_px=d["light"]["softness_px"],
        )
        objects = tuple(
            ObjectSpec(
                shape=o["shape"],
                footprint=tuple(o["footprint"]),
                height_px=o["height_px"],
                albedo=tuple(o["albedo"]),
                casts_shadow=o.get("casts_shadow", True),
            )
            for o in d["objects"]
        )
        return cls(
            resolution=tuple(d["resolution"]),
            ground_albedo=tuple(d["ground_albedo"]),
            ground_texture_seed=d["ground_texture_seed"],
            light=light,
            objects=objects,
            ground_flip_x=d.get("ground_flip_x", False),
        )


@dataclass
class SceneSample:
    """One paired training example with full or partial annotation.

    Partial annotation mirrors shadow-removal datasets: no per-object masks,
    a single union shadow mask.
    """

    image_shadowed: np.ndarray
    image_shadowfree: np.ndarray
    object_masks: list[np.ndarray]
    shadow_masks: list[np.ndarray]
    spec: SceneSpec
    annotation: str = "full"

    def __post_init__(self):
        if self.annotation not in ANNOTATION_LEVELS:
            raise WorldError(f"annotation must be one of {ANNOTATION_LEVELS}")
        self.validate()

    @property
    def resolution(self) -> tuple[int, int]:
        return self.image_shadowed.shape[:2]

    def shadow_union(self) -> np.ndarray:
        """Element-wise max over all shadow masks (zeros if none)."""
        h, w = self.resolution
        if not self.shadow_masks:
            return np.zeros((h, w), dtype=np.float64)
        out = self.shadow_masks[0]
        for m in self.shadow_masks[1:]:
            out = np.maximum(out, m)
        return out

    def validate(self):
        h, w = self.image_shadowed.shape[:2]
        for name, img in (
            ("image_shadowed", self.image_shadowed),
            ("image_shadowfree", self.image_shadowfree),
        ):
            if img.shape != (h, w, 3):
                raise WorldError(f"{name} shape {img.shape} != {(h, w, 3)}")
            _check_raster(name, img)
        for name, masks in (
            ("object_masks", self.object_masks),
            ("shadow_masks", self.shadow_masks),
        ):
            for i, m in enumerate(masks):
                if m.shape != (h, w):
                    raise WorldError(f"{name}[{i}] shape {m.shape} != {(h, w)}")
                _check_raster(f"{name}[{i}]", m)
        if self.annotation == "full" and len(self.shadow_masks) != len(
            self.object_masks
        ):
            raise WorldError(
                "full annotation requires one shadow mask per object mask"
            )
        # Object masks must be disjoint once binarized.
        if len(self.object_masks) > 1:
            occupancy = np.zeros((h, w), dtype=np.int32)
            for m in self.object_masks:
                occupancy += (m > 0.5).astype(np.int32)
            if occupancy.max() > 1:
                raise WorldError("object masks overlap after binarization at 0.5")

    def copy(self) -> "SceneSample":
        return SceneSample(
            image_shadowed=self.image_shadowed.copy(),
            image_shadowfree=self.image_shadowfree.copy(),
            object_masks=[m.copy() for m in self.object_masks],
            shadow_masks=[m.copy() for m in self.shadow_masks],
            spec=self.spec,
            annotation=self.annotation,
        )


def _check_raster(name: str, arr: np.ndarray):
    if not np.isfinite(arr).all():
        raise WorldError(f"{name} contains NaN/Inf")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise WorldError(f"{name} values outside [0, 1]")


def downgrade_to_partial(sample: SceneSample) -> SceneSample:
    """Strip per-object annotation, keeping a single union shadow mask."""
    return SceneSample(
        image_shadowed=sample.image_shadowed.copy(),
        image_shadowfree=sample.image_shadowfree.copy(),
        object_masks=[],
        shadow_masks=[sample.shadow_union()],
        spec=sample.spec,
        annotation="partial",
    )


def mirror_azimuth(azimuth_rad: float) -> float:
    """Azimuth of the horizontally mirrored light direction, in [0, 2*pi)."""
    return (math.pi - azimuth_rad) % (2.0 * math.pi)


def flip_scene_spec(spec: SceneSpec) -> SceneSpec:
    """Spec whose render is the horizontal mirror of the original render."""
    _, w = spec.resolution
    return replace(
        spec,
        light=replace(spec.light, azimuth_rad=mirror_azimuth(spec.light.azimuth_rad)),
        objects=tuple(o.mirrored_x(w) for o in spec.objects),
        ground_flip_x=not spec.ground_flip_x,
    )
