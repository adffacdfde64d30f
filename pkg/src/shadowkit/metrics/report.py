"""Per-task evaluation drivers and the serializable metric report."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..world.spec import SceneSample
from . import measures

TASKS = ("detection", "removal", "synthesis")

REPORT_SCHEMA = {
    "type": "object",
    "required": ["task", "num_samples", "aggregates", "per_sample", "bucket_counts"],
    "properties": {
        "task": {"enum": list(TASKS)},
        "num_samples": {"type": "integer", "minimum": 0},
        "aggregates": {"type": "object"},
        "per_sample": {"type": "array", "items": {"type": "object"}},
        "bucket_counts": {"type": "object"},
    },
}


@dataclass
class MetricReport:
    task: str
    per_sample: list[dict]
    bucket_counts: dict[str, int] = field(default_factory=dict)

    @property
    def num_samples(self) -> int:
        return len(self.per_sample)

    @property
    def aggregates(self) -> dict[str, float]:
        """Plain means of per-sample values, skipping missing entries."""
        keys = set()
        for rec in self.per_sample:
            keys.update(k for k, v in rec.items() if isinstance(v, (int, float)))
        keys.discard("index")
        out = {}
        for k in sorted(keys):
            vals = [rec[k] for rec in self.per_sample if k in rec]
            if vals:
                out[k] = float(np.mean(vals))
        return out

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "num_samples": self.num_samples,
            "aggregates": self.aggregates,
            "per_sample": self.per_sample,
            "bucket_counts": self.bucket_counts,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        if not self.per_sample:
            return ""
        keys = sorted({k for rec in self.per_sample for k in rec})
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=keys)
        writer.writeheader()
        for rec in self.per_sample:
            writer.writerow(rec)
        return buf.getvalue()


def evaluate_detection(
    preds: list[np.ndarray], gts: list[np.ndarray], native_resolution: int = 512
) -> MetricReport:
    """Bucketed mIoU over mask predictions."""
    per_sample = []
    bucket_counts = {b: 0 for b in measures.SIZE_BUCKETS}
    bucket_counts["empty"] = 0
    for i, (p, g) in enumerate(zip(preds, gts)):
        bucket = measures.size_bucket(g, native_resolution)
        rec = {"index": i, "iou": measures.iou(p, g)}
        if bucket is None:
            bucket_counts["empty"] += 1
            rec["bucket"] = "empty"
        else:
            bucket_counts[bucket] += 1
            rec["bucket"] = bucket
        per_sample.append(rec)
    report = MetricReport("detection", per_sample, bucket_counts)
    return report


def detection_miou(report: MetricReport) -> dict[str, float]:
    """Overall and per-bucket mean IoU from a detection report."""
    out = {}
    vals = [r["iou"] for r in report.per_sample if r["bucket"] != "empty"]
    if vals:
        out["miou"] = float(np.mean(vals))
    for b in measures.SIZE_BUCKETS:
        vals = [r["iou"] for r in report.per_sample if r["bucket"] == b]
        if vals:
            out[f"miou_{b}"] = float(np.mean(vals))
    return out


def evaluate_removal(
    preds: list[np.ndarray], gts: list[np.ndarray], masks: list[np.ndarray]
) -> MetricReport:
    per_sample = []
    for i, (p, g, m) in enumerate(zip(preds, gts, masks)):
        per_sample.append(
            {
                "index": i,
                "masked_mae": measures.masked_mae(p, g, m),
                "masked_rmse_lab": measures.masked_rmse_lab(p, g, m),
                "bbox_psnr": measures.bbox_psnr(p, g, m),
                "bbox_ssim": measures.bbox_ssim(p, g, m),
                "psnr": measures.psnr(p, g),
            }
        )
    return MetricReport("removal", per_sample)


def evaluate_synthesis(
    preds: list[np.ndarray], gts: list[np.ndarray], masks: list[np.ndarray]
) -> MetricReport:
    per_sample = []
    for i, (p, g, m) in enumerate(zip(preds, gts, masks)):
        per_sample.append(
            {
                "index": i,
                "global_rmse": measures.global_rmse(p, g),
                "local_rmse": measures.local_rmse(p, g, m),
                "bbox_psnr": measures.bbox_psnr(p, g, m),
                "bbox_ssim": measures.bbox_ssim(p, g, m),
            }
        )
    return MetricReport("synthesis", per_sample)


@dataclass
class EvalItem:
    """One prediction to score against a dataset sample.

    object_index selects which object's shadow mask bounds the error
    region; None means the union of all shadow masks.
    """

    sample_index: int
    raster: np.ndarray
    object_index: int | None = None


def _gt_mask(sample: SceneSample, object_index: int | None) -> np.ndarray:
    if object_index is None:
        return sample.shadow_union()
    return sample.shadow_masks[object_index]


def evaluate(
    task: str,
    predictions: list[EvalItem],
    dataset: list[SceneSample],
    native_resolution: int = 512,
) -> MetricReport:
    """Score predictions against ground truth for one task.

    detection: raster = predicted shadow mask, compared to the GT mask.
    removal:   raster = predicted shadow-free image vs GT shadow-free.
    synthesis: raster = predicted shadowed image vs GT shadowed.
    """
    if task not in TASKS:
        raise measures.MetricError(f"unknown task {task!r}")
    gts, masks, rasters = [], [], []
    for item in predictions:
        sample = dataset[item.sample_index]
        mask = _gt_mask(sample, item.object_index)
        rasters.append(item.raster)
        masks.append(mask)
        if task == "detection":
            gts.append(mask)
        elif task == "removal":
            gts.append(sample.image_shadowfree)
        else:
            gts.append(sample.image_shadowed)
    if task == "detection":
        return evaluate_detection(rasters, gts, native_resolution)
    if task == "removal":
        return evaluate_removal(rasters, gts, masks)
    return evaluate_synthesis(rasters, gts, masks)
