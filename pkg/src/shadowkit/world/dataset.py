"""Dataset read/write: one directory per sample, PNG rasters, JSON metadata.

Layout:
    <root>/manifest.json
    <root>/<sample_id>/image.png        shadowed image (8-bit RGB)
    <root>/<sample_id>/shadowfree.png   shadow-free image (8-bit RGB)
    <root>/<sample_id>/objmask_<k>.png  object masks (8-bit grayscale)
    <root>/<sample_id>/shadmask_<k>.png shadow masks (8-bit grayscale)
    <root>/<sample_id>/meta.json        SceneSpec + annotation level

Writes are deterministic: no timestamps, sorted JSON keys. The JSON
schemas below are the authority for the on-disk format (also documented
in docs/SCHEMAS.md).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

import jsonschema

from .spec import SceneSample, SceneSpec

FORMAT_VERSION = 1

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["format_version", "samples"],
    "properties": {
        "format_version": {"type": "integer"},
        "samples": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "split"],
                "properties": {
                    "id": {"type": "string"},
                    "split": {"type": "string"},
                },
            },
        },
    },
}

META_SCHEMA = {
    "type": "object",
    "required": ["format_version", "annotation", "spec", "num_objects", "num_shadow_masks"],
    "properties": {
        "format_version": {"type": "integer"},
        "annotation": {"enum": ["full", "partial"]},
        "num_objects": {"type": "integer", "minimum": 0},
        "num_shadow_masks": {"type": "integer", "minimum": 0},
        "spec": {
            "type": "object",
            "required": [
                "resolution",
                "ground_albedo",
                "ground_texture_seed",
                "light",
                "objects",
            ],
        },
    },
}


class DatasetSchemaError(ValueError):
    """On-disk metadata does not match the documented schema."""


def _validate(instance: dict, schema: dict, where: str):
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as e:
        path = ".".join(str(p) for p in e.absolute_path) or "(root)"
        raise DatasetSchemaError(f"{where}: field {path}: {e.message}") from e


def _save_png(path: Path, arr: np.ndarray):
    data = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    mode = "RGB" if data.ndim == 3 else "L"
    Image.fromarray(data, mode=mode).save(path, format="PNG")


def _load_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im, dtype=np.float64) / 255.0
    return arr


def write_dataset(
    samples: list[SceneSample], root: str | Path, split: str = "train"
) -> Path:
    """Write samples under `root`; returns the manifest path."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, sample in enumerate(samples):
        sid = f"s{i:05d}"
        sdir = root / sid
        sdir.mkdir(exist_ok=True)
        _save_png(sdir / "image.png", sample.image_shadowed)
        _save_png(sdir / "shadowfree.png", sample.image_shadowfree)
        for k, m in enumerate(sample.object_masks):
            _save_png(sdir / f"objmask_{k}.png", m)
        for k, m in enumerate(sample.shadow_masks):
            _save_png(sdir / f"shadmask_{k}.png", m)
        meta = {
            "format_version": FORMAT_VERSION,
            "annotation": sample.annotation,
            "num_objects": len(sample.object_masks),
            "num_shadow_masks": len(sample.shadow_masks),
            "spec": sample.spec.to_json_dict(),
        }
        (sdir / "meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n"
        )
        entries.append({"id": sid, "split": split})
    manifest = {"format_version": FORMAT_VERSION, "samples": entries}
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def read_dataset(root: str | Path, split: str | None = None) -> list[SceneSample]:
    """Read all samples (optionally one split). Missing manifest in an
    existing directory reads as an empty dataset."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        if root.is_dir():
            return []
        raise FileNotFoundError(f"dataset directory {root} does not exist")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise DatasetSchemaError(f"manifest.json: invalid JSON: {e}") from e
    _validate(manifest, MANIFEST_SCHEMA, "manifest.json")

    samples = []
    for entry in manifest["samples"]:
        if split is not None and entry["split"] != split:
            continue
        sdir = root / entry["id"]
        meta_path = sdir / "meta.json"
        try:
            meta = json.loads(meta_path.read_text())
        except json.JSONDecodeError as e:
            raise DatasetSchemaError(f"{meta_path}: invalid JSON: {e}") from e
        _validate(meta, META_SCHEMA, str(meta_path))
        spec = SceneSpec.from_json_dict(meta["spec"])
        image = _load_png(sdir / "image.png")
        shadowfree = _load_png(sdir / "shadowfree.png")
        object_masks = [
            _load_png(sdir / f"objmask_{k}.png") for k in range(meta["num_objects"])
        ]
        shadow_masks = [
            _load_png(sdir / f"shadmask_{k}.png")
            for k in range(meta["num_shadow_masks"])
        ]
        samples.append(
            SceneSample(
                image_shadowed=image,
                image_shadowfree=shadowfree,
                object_masks=object_masks,
                shadow_masks=shadow_masks,
                spec=spec,
                annotation=meta["annotation"],
            )
        )
    return samples
