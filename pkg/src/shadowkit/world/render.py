"""Deterministic 2.5D renderer: paired shadowed / shadow-free scenes.

The shadow of a convex footprint under a directional light is the union of
the footprint translated along the light's ground offset for every height
fraction u in [0, 1] -- i.e. the Minkowski sum of the footprint with the
offset segment. For convex footprints that is again convex (a capsule for
circles, a convex hull for polygons), so masks rasterize analytically.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
from scipy import ndimage

from .spec import (
    GenerationError,
    LightSpec,
    ObjectSpec,
    OutOfFrameError,
    SceneSample,
    SceneSpec,
    WorldError,
)

MAX_PLACEMENT_ATTEMPTS = 100


# ---------------------------------------------------------------------------
# geometry helpers


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull; returns hull vertices, counterclockwise
    in the y-down image frame."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def build(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
                if cross <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = build(pts)
    upper = build(pts[::-1])
    return np.array(lower[:-1] + upper[:-1], dtype=np.float64)


def _fill_convex(verts: np.ndarray, resolution: tuple[int, int]) -> np.ndarray:
    """Hard mask of a convex polygon; boundary pixels included."""
    h, w = resolution
    xs = np.arange(w, dtype=np.float64)[None, :]
    ys = np.arange(h, dtype=np.float64)[:, None]
    if len(verts) == 1:
        # Degenerate: a point.
        mask = np.zeros((h, w), dtype=np.float64)
        x0, y0 = verts[0]
        if abs(x0 - round(x0)) < 1e-12 and abs(y0 - round(y0)) < 1e-12:
            xi, yi = int(round(x0)), int(round(y0))
            if 0 <= xi < w and 0 <= yi < h:
                mask[yi, xi] = 1.0
        return mask
    if len(verts) == 2:
        # Degenerate: a segment. Rasterize as a zero-radius capsule.
        return _fill_capsule(verts[0], verts[1], 0.0, resolution)
    inside = np.ones((h, w), dtype=bool)
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        cross = (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0)
        inside &= cross >= 0
    return inside.astype(np.float64)


def _fill_capsule(
    a: np.ndarray, b: np.ndarray, radius: float, resolution: tuple[int, int]
) -> np.ndarray:
    """Hard mask of all pixels within `radius` of segment [a, b]."""
    h, w = resolution
    xs = np.arange(w, dtype=np.float64)[None, :]
    ys = np.arange(h, dtype=np.float64)[:, None]
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0.0:
        d2 = (xs - ax) ** 2 + (ys - ay) ** 2
    else:
        t = ((xs - ax) * dx + (ys - ay) * dy) / seg_len2
        t = np.clip(t, 0.0, 1.0)
        d2 = (xs - (ax + t * dx)) ** 2 + (ys - (ay + t * dy)) ** 2
    return (d2 <= radius * radius).astype(np.float64)


def footprint_mask(obj: ObjectSpec, resolution: tuple[int, int]) -> np.ndarray:
    """Hard (0/1) mask of the object's footprint."""
    if obj.shape == "circle":
        cx, cy, r = obj.footprint
        c = np.array([cx, cy], dtype=np.float64)
        return _fill_capsule(c, c, r, resolution)
    return _fill_convex(convex_hull(obj.vertices()), resolution)


def shadow_hull_points(obj: ObjectSpec, light: LightSpec) -> np.ndarray:
    """Vertices (or capsule endpoints for circles) spanning the hard shadow."""
    ox, oy = light.shadow_offset_xy(obj.height_px)
    if obj.shape == "circle":
        cx, cy, _ = obj.footprint
        return np.array([[cx, cy], [cx + ox, cy + oy]], dtype=np.float64)
    v = obj.vertices()
    shifted = np.column_stack([v[:, 0] + ox, v[:, 1] + oy])
    return np.vstack([v, shifted])


def shadow_bounds(obj: ObjectSpec, light: LightSpec) -> tuple[float, float, float, float]:
    """(xmin, ymin, xmax, ymax) of the hard shadow (softness ignored)."""
    pts = shadow_hull_points(obj, light)
    if obj.shape == "circle":
        r = obj.footprint[2]
        return (
            pts[:, 0].min() - r,
            pts[:, 1].min() - r,
            pts[:, 0].max() + r,
            pts[:, 1].max() + r,
        )
    return (pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max())


def project_shadow(
    obj: ObjectSpec, light: LightSpec, resolution: tuple[int, int]
) -> np.ndarray:
    """Soft shadow mask cast by one object onto the ground plane.

    The hard region is the Minkowski sum of the footprint with the ground
    offset segment; softness blurs it with a Gaussian of sigma=softness_px.
    """
    if light.elevation_rad <= 0:
        raise WorldError("light elevation must be > 0")
    if obj.shape == "circle":
        cx, cy, r = obj.footprint
        ox, oy = light.shadow_offset_xy(obj.height_px)
        a = np.array([cx, cy], dtype=np.float64)
        b = np.array([cx + ox, cy + oy], dtype=np.float64)
        hard = _fill_capsule(a, b, r, resolution)
    else:
        hull = convex_hull(shadow_hull_points(obj, light))
        hard = _fill_convex(hull, resolution)
    if light.softness_px > 0:
        soft = ndimage.gaussian_filter(hard, sigma=light.softness_px, mode="constant")
        return np.clip(soft, 0.0, 1.0)
    return hard


# ---------------------------------------------------------------------------
# ground texture


def ground_texture(
    seed: int, resolution: tuple[int, int], albedo: tuple[float, float, float],
    flip_x: bool = False,
) -> np.ndarray:
    """Seeded multi-octave value noise tinted by the ground albedo."""
    h, w = resolution
    rng = np.random.default_rng(seed)
    noise = np.zeros((h, w), dtype=np.float64)
    for cells, weight in ((4, 0.5), (8, 0.3), (16, 0.2)):
        grid = rng.random((cells + 1, cells + 1))
        noise += weight * _bilinear_upsample(grid, (h, w))
    noise -= 0.5
    tex = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        tex[:, :, c] = np.clip(albedo[c] * (1.0 + 0.5 * noise), 0.0, 1.0)
    if flip_x:
        tex = tex[:, ::-1].copy()
    return tex


def _bilinear_upsample(grid: np.ndarray, resolution: tuple[int, int]) -> np.ndarray:
    h, w = resolution
    gh, gw = grid.shape
    ys = np.linspace(0.0, gh - 1.0, h)
    xs = np.linspace(0.0, gw - 1.0, w)
    y0 = np.clip(np.floor(ys).astype(int), 0, gh - 2)
    x0 = np.clip(np.floor(xs).astype(int), 0, gw - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g00 = grid[np.ix_(y0, x0)]
    g01 = grid[np.ix_(y0, x0 + 1)]
    g10 = grid[np.ix_(y0 + 1, x0)]
    g11 = grid[np.ix_(y0 + 1, x0 + 1)]
    return (
        g00 * (1 - fy) * (1 - fx)
        + g01 * (1 - fy) * fx
        + g10 * fy * (1 - fx)
        + g11 * fy * fx
    )


# ---------------------------------------------------------------------------
# rendering


def shadow_darkening(
    union_mask: np.ndarray, light: LightSpec
) -> np.ndarray:
    """Per-pixel, per-channel multiplier: 1 - strength*(1-tint_c)*mask."""
    s = light.shadow_strength
    factors = np.empty(union_mask.shape + (3,), dtype=np.float64)
    for c in range(3):
        factors[:, :, c] = 1.0 - s * (1.0 - light.shadow_tint[c]) * union_mask
    return factors


def render_scene(spec: SceneSpec) -> SceneSample:
    """Render paired shadowed / shadow-free images with exact masks."""
    h, w = spec.resolution
    base = ground_texture(
        spec.ground_texture_seed, (h, w), spec.ground_albedo, spec.ground_flip_x
    )

    object_masks = []
    shadowfree = base
    for obj in spec.objects:
        m = footprint_mask(obj, (h, w))
        object_masks.append(m)
        fill = np.array(obj.albedo, dtype=np.float64)[None, None, :]
        shadowfree = shadowfree * (1.0 - m[:, :, None]) + fill * m[:, :, None]

    shadow_masks = []
    for obj in spec.objects:
        if obj.casts_shadow:
            shadow_masks.append(project_shadow(obj, spec.light, (h, w)))
        else:
            shadow_masks.append(np.zeros((h, w), dtype=np.float64))

    union = shadow_masks[0]
    for m in shadow_masks[1:]:
        union = np.maximum(union, m)
    shadowed = shadowfree * shadow_darkening(union, spec.light)

    return SceneSample(
        image_shadowed=np.clip(shadowed, 0.0, 1.0),
        image_shadowfree=np.clip(shadowfree, 0.0, 1.0),
        object_masks=object_masks,
        shadow_masks=shadow_masks,
        spec=spec,
        annotation="full",
    )


# ---------------------------------------------------------------------------
# scene sampling


def _sample_object(
    rng: np.random.Generator, resolution: tuple[int, int]
) -> ObjectSpec:
    h, w = resolution
    scale = min(h, w)
    shape = str(rng.choice(["circle", "rectangle", "polygon"]))
    height = float(rng.uniform(0.08, 0.28) * scale)
    albedo = tuple(rng.uniform(0.05, 0.95, size=3).tolist())
    cx = float(rng.uniform(0.2, 0.8) * (w - 1))
    cy = float(rng.uniform(0.2, 0.8) * (h - 1))
    if shape == "circle":
        r = float(rng.uniform(0.04, 0.12) * scale)
        footprint = (cx, cy, r)
    elif shape == "rectangle":
        hw = rng.uniform(0.04, 0.12) * scale
        hh = rng.uniform(0.04, 0.12) * scale
        footprint = (cx - hw, cy - hh, cx + hw, cy + hh)
    else:
        n = int(rng.integers(3, 7))
        angles = np.sort(rng.uniform(0, 2 * math.pi, size=n))
        radii = rng.uniform(0.05, 0.12, size=n) * scale
        xs = cx + radii * np.cos(angles)
        ys = cy + radii * np.sin(angles)
        hull = convex_hull(np.column_stack([xs, ys]))
        if len(hull) < 3:
            # Nearly collinear draw; retry by widening one radius.
            return _sample_object(rng, resolution)
        footprint = tuple(float(v) for v in hull.reshape(-1))
    return ObjectSpec(shape=shape, footprint=footprint, height_px=height, albedo=albedo)


def _clamped_footprint(obj: ObjectSpec, resolution: tuple[int, int]) -> ObjectSpec:
    """Shift the footprint so it lies fully inside the frame."""
    h, w = resolution
    xmin, ymin, xmax, ymax = obj.bounds()
    dx = max(0.0, -xmin) - max(0.0, xmax - (w - 1))
    dy = max(0.0, -ymin) - max(0.0, ymax - (h - 1))
    return obj.translated(dx, dy)


def shadow_in_frame_fraction(
    obj: ObjectSpec, light: LightSpec, resolution: tuple[int, int]
) -> float:
    """Fraction of the hard shadow area inside the frame."""
    h, w = resolution
    xmin, ymin, xmax, ymax = shadow_bounds(obj, light)
    pad_left = max(0, int(math.ceil(-xmin)) + 1)
    pad_top = max(0, int(math.ceil(-ymin)) + 1)
    pad_right = max(0, int(math.ceil(xmax - (w - 1))) + 1)
    pad_bottom = max(0, int(math.ceil(ymax - (h - 1))) + 1)
    big = (h + pad_top + pad_bottom, w + pad_left + pad_right)
    shifted = obj.translated(pad_left, pad_top)
    hard_light = replace(light, softness_px=0.0)
    mask = project_shadow(shifted, hard_light, big)
    total = mask.sum()
    if total == 0:
        return 1.0
    inside = mask[pad_top : pad_top + h, pad_left : pad_left + w].sum()
    return float(inside / total)


def _masks_overlap(a: ObjectSpec, b: ObjectSpec, resolution) -> bool:
    ma = footprint_mask(a, resolution)
    mb = footprint_mask(b, resolution)
    return bool(((ma > 0.5) & (mb > 0.5)).any())


def sample_scene_spec(
    rng_seed: int, resolution: tuple[int, int], max_objects: int = 4
) -> SceneSpec:
    """Deterministic random scene: placement guarantees each hard shadow
    keeps >= 90% of its area in frame and footprints stay disjoint."""
    h, w = resolution
    if h < 32 or w < 32:
        raise WorldError("resolution must be at least 32x32")
    rng = np.random.default_rng(rng_seed)
    light = LightSpec(
        azimuth_rad=float(rng.uniform(0.0, 2.0 * math.pi)),
        elevation_rad=float(rng.uniform(math.radians(20.0), math.radians(70.0))),
        shadow_strength=float(rng.uniform(0.4, 0.85)),
        shadow_tint=tuple(rng.uniform(0.55, 0.95, size=3).tolist()),
        softness_px=float(rng.uniform(0.0, 2.0)),
    )
    n_objects = int(rng.integers(1, max_objects + 1))
    objects: list[ObjectSpec] = []
    for _ in range(n_objects):
        placed = False
        for _attempt in range(MAX_PLACEMENT_ATTEMPTS):
            candidate = _clamped_footprint(_sample_object(rng, resolution), resolution)
            if shadow_in_frame_fraction(candidate, light, resolution) < 0.9:
                continue
            if any(_masks_overlap(candidate, o, resolution) for o in objects):
                continue
            objects.append(candidate)
            placed = True
            break
        if not placed:
            raise GenerationError(
                f"could not place object after {MAX_PLACEMENT_ATTEMPTS} attempts"
            )
    ground = tuple(rng.uniform(0.35, 0.85, size=3).tolist())
    return SceneSpec(
        resolution=(h, w),
        ground_albedo=ground,
        ground_texture_seed=int(rng.integers(0, 2**31 - 1)),
        light=light,
        objects=tuple(objects),
    )


# ---------------------------------------------------------------------------
# relocation


def make_relocation_pair(
    sample: SceneSample, object_index: int, offset: tuple[float, float]
) -> tuple[SceneSample, SceneSample]:
    """(before, after) where `after` re-renders with one object translated.

    Errors out if the translated footprint or its hard shadow leaves the
    frame.
    """
    spec = sample.spec
    if not 0 <= object_index < len(spec.objects):
        raise WorldError(f"object_index {object_index} out of range")
    dx, dy = offset
    h, w = spec.resolution
    moved = spec.objects[object_index].translated(dx, dy)
    xmin, ymin, xmax, ymax = moved.bounds()
    if xmin < 0 or ymin < 0 or xmax > w - 1 or ymax > h - 1:
        raise OutOfFrameError("translated footprint leaves the frame")
    sxmin, symin, sxmax, symax = shadow_bounds(moved, spec.light)
    if sxmin < 0 or symin < 0 or sxmax > w - 1 or symax > h - 1:
        raise OutOfFrameError("translated shadow leaves the frame")
    new_objects = list(spec.objects)
    new_objects[object_index] = moved
    new_spec = SceneSpec(
        resolution=spec.resolution,
        ground_albedo=spec.ground_albedo,
        ground_texture_seed=spec.ground_texture_seed,
        light=spec.light,
        objects=tuple(new_objects),
        ground_flip_x=spec.ground_flip_x,
    )
    return sample, render_scene(new_spec)
