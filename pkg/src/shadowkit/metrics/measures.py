"""Image-quality and mask-quality metrics.

Conventions: images are H*W*3 float arrays in [0,1] and get scaled to 0-255
for error metrics; masks are H*W float arrays binarized at 0.5. Every metric
here has a naive per-pixel reference implementation in the test suite.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .color import rgb_to_lab

PSNR_CAP_DB = 99.0
BBOX_PAD_PX = 4
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

SIZE_BUCKETS = ("xs", "s", "m", "l")


class MetricError(ValueError):
    pass


def _binary(mask: np.ndarray) -> np.ndarray:
    return np.asarray(mask) > 0.5


def iou(pred: np.ndarray, gt: np.ndarray, threshold: float = 0.5) -> float:
    """Intersection over union of binarized masks; 1.0 when both empty."""
    p = np.asarray(pred) > threshold
    g = np.asarray(gt) > threshold
    union = np.logical_or(p, g).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, g).sum() / union)


def size_bucket(gt: np.ndarray, native_resolution: int = 512) -> str | None:
    """COCO-style area bucket with an extra-small category.

    Areas rescale to a 512-equivalent by (512/H)^2. Boundaries are
    [low, high): xs < 16^2 <= s < 32^2 <= m < 96^2 <= l. Empty masks
    return None (counted separately by callers).
    """
    g = _binary(gt)
    area = int(g.sum())
    if area == 0:
        return None
    h = gt.shape[0]
    scaled = area * (native_resolution / h) ** 2
    if scaled < 16**2:
        return "xs"
    if scaled < 32**2:
        return "s"
    if scaled < 96**2:
        return "m"
    return "l"


def masked_mae(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> float:
    """Mean absolute error on the 0-255 scale inside the mask."""
    m = _binary(mask)
    if not m.any():
        raise MetricError("masked_mae undefined for an empty mask")
    diff = np.abs(pred.astype(np.float64) - gt.astype(np.float64)) * 255.0
    return float(diff[m].mean())


def masked_rmse_lab(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> float:
    """Root-mean of per-pixel squared Euclidean CIELAB distance inside the mask."""
    m = _binary(mask)
    if not m.any():
        raise MetricError("masked_rmse_lab undefined for an empty mask")
    d2 = ((rgb_to_lab(pred) - rgb_to_lab(gt)) ** 2).sum(axis=-1)
    return float(math.sqrt(d2[m].mean()))


def psnr(pred: np.ndarray, gt: np.ndarray) -> float:
    """PSNR in dB on the 0-255 scale, capped at 99 dB near-identity."""
    diff = (pred.astype(np.float64) - gt.astype(np.float64)) * 255.0
    mse = float((diff**2).mean())
    if mse < 255.0**2 * 10 ** (-PSNR_CAP_DB / 10.0):
        return PSNR_CAP_DB
    return float(10.0 * math.log10(255.0**2 / mse))


def mask_bbox(
    mask: np.ndarray, pad: int = BBOX_PAD_PX
) -> tuple[int, int, int, int]:
    """Tight bbox of mask>0.5 padded and clamped; (y0, x0, y1, x1), exclusive
    upper bounds."""
    m = _binary(mask)
    if not m.any():
        raise MetricError("bbox undefined for an empty mask")
    rows = np.where(m.any(axis=1))[0]
    cols = np.where(m.any(axis=0))[0]
    h, w = mask.shape
    y0 = max(0, int(rows[0]) - pad)
    y1 = min(h, int(rows[-1]) + 1 + pad)
    x0 = max(0, int(cols[0]) - pad)
    x1 = min(w, int(cols[-1]) + 1 + pad)
    return y0, x0, y1, x1


def bbox_psnr(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> float:
    y0, x0, y1, x1 = mask_bbox(mask)
    return psnr(pred[y0:y1, x0:x1], gt[y0:y1, x0:x1])


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def _local_weighted(img: np.ndarray, kernel: np.ndarray, support: np.ndarray):
    """Weighted local mean with the kernel truncated and renormalized at the
    crop borders (zero-padded correlation divided by in-crop weight mass)."""
    num = ndimage.correlate(img, kernel, mode="constant", cval=0.0)
    return num / support


def ssim_map(x: np.ndarray, y: np.ndarray, data_range: float = 255.0) -> np.ndarray:
    """Single-scale SSIM map for one channel with an 11x11 Gaussian window."""
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    support = ndimage.correlate(
        np.ones_like(x), kernel, mode="constant", cval=0.0
    )
    mu_x = _local_weighted(x, kernel, support)
    mu_y = _local_weighted(y, kernel, support)
    mu_xx = _local_weighted(x * x, kernel, support)
    mu_yy = _local_weighted(y * y, kernel, support)
    mu_xy = _local_weighted(x * y, kernel, support)
    var_x = mu_xx - mu_x**2
    var_y = mu_yy - mu_y**2
    cov = mu_xy - mu_x * mu_y
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    return ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    )


def bbox_ssim(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> float:
    """Mean SSIM over the padded shadow bbox, averaged across channels."""
    y0, x0, y1, x1 = mask_bbox(mask)
    p = pred[y0:y1, x0:x1] * 255.0
    g = gt[y0:y1, x0:x1] * 255.0
    vals = [ssim_map(p[:, :, c], g[:, :, c]).mean() for c in range(p.shape[2])]
    return float(np.mean(vals))


def global_rmse(pred: np.ndarray, gt: np.ndarray) -> float:
    """RMSE on the 0-255 scale over all pixels and channels."""
    diff = (pred.astype(np.float64) - gt.astype(np.float64)) * 255.0
    return float(math.sqrt((diff**2).mean()))


def local_rmse(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> float:
    """RMSE on the 0-255 scale inside the binarized mask."""
    m = _binary(mask)
    if not m.any():
        raise MetricError("local_rmse undefined for an empty mask")
    diff = (pred.astype(np.float64) - gt.astype(np.float64)) * 255.0
    return float(math.sqrt((diff[m] ** 2).mean()))
