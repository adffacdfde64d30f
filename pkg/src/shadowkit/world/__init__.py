"""Procedural 2.5D shadow world: paired data generation and storage."""

from .spec import (
    GenerationError,
    LightSpec,
    ObjectSpec,
    OutOfFrameError,
    SceneSample,
    SceneSpec,
    WorldError,
    downgrade_to_partial,
    flip_scene_spec,
    mirror_azimuth,
)
from .render import (
    footprint_mask,
    ground_texture,
    make_relocation_pair,
    project_shadow,
    render_scene,
    sample_scene_spec,
    shadow_bounds,
    shadow_darkening,
    shadow_in_frame_fraction,
)
from .dataset import DatasetSchemaError, read_dataset, write_dataset

__all__ = [
    "GenerationError",
    "LightSpec",
    "ObjectSpec",
    "OutOfFrameError",
    "SceneSample",
    "SceneSpec",
    "WorldError",
    "downgrade_to_partial",
    "flip_scene_spec",
    "mirror_azimuth",
    "footprint_mask",
    "ground_texture",
    "make_relocation_pair",
    "project_shadow",
    "render_scene",
    "sample_scene_spec",
    "shadow_bounds",
    "shadow_darkening",
    "shadow_in_frame_fraction",
    "DatasetSchemaError",
    "read_dataset",
    "write_dataset",
]
