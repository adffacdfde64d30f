"""Evaluation metrics with brute-force reference oracles in the test suite."""

from .color import lab_to_rgb, rgb_to_lab
from .measures import (
    BBOX_PAD_PX,
    PSNR_CAP_DB,
    MetricError,
    bbox_psnr,
    bbox_ssim,
    global_rmse,
    iou,
    local_rmse,
    mask_bbox,
    masked_mae,
    masked_rmse_lab,
    psnr,
    size_bucket,
    ssim_map,
)
from .report import (
    REPORT_SCHEMA,
    EvalItem,
    MetricReport,
    detection_miou,
    evaluate,
    evaluate_detection,
    evaluate_removal,
    evaluate_synthesis,
)

__all__ = [
    "BBOX_PAD_PX",
    "PSNR_CAP_DB",
    "MetricError",
    "bbox_psnr",
    "bbox_ssim",
    "global_rmse",
    "iou",
    "local_rmse",
    "mask_bbox",
    "masked_mae",
    "masked_rmse_lab",
    "psnr",
    "size_bucket",
    "ssim_map",
    "lab_to_rgb",
    "rgb_to_lab",
    "REPORT_SCHEMA",
    "EvalItem",
    "MetricReport",
    "detection_miou",
    "evaluate",
    "evaluate_detection",
    "evaluate_removal",
    "evaluate_synthesis",
]
