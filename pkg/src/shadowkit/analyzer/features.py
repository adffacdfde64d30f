"""Mid-scale shadow feature block: the knowledge handed to the synthesizer.

Levels larger than the configured sources are excluded on purpose: high
resolution maps carry ground texture, and only shadow properties should
transfer.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

from .config import AnalyzerConfig


def extract_shadow_features(
    feats_spatial: list[torch.Tensor], cfg: AnalyzerConfig
) -> torch.Tensor:
    """Resize the selected spatial-decoder levels to the feature grid and
    concatenate along channels -> (B, fms_channels, g, g)."""
    by_size = {f.shape[-1]: f for f in feats_spatial}
    g = cfg.fms_grid
    parts = []
    for size in cfg.fms_source_sizes:
        if size not in by_size:
            raise ValueError(f"no spatial feature of size {size} in pyramid")
        parts.append(
            F.interpolate(
                by_size[size], size=(g, g), mode="bilinear", align_corners=False
            )
        )
    fms = torch.cat(parts, dim=1)
    expected = cfg.fms_channels
    if fms.shape[1] != expected:
        raise ValueError(
            f"feature block has {fms.shape[1]} channels, config documents {expected}"
        )
    return fms
