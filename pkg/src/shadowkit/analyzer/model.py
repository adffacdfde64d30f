"""Shadow analyzer network: encoder, dual modulated decoders, detector head,
and the patch discriminator.

The generator follows an inpainting-style layout: a strided encoder over
RGB+object-mask, then two parallel upsampling decoders. The global branch is
feature-wise modulated by the concatenated style codes (s from the image, w
from noise); the spatial branch is per-pixel modulated by the global branch's
output at the same level. The RGB head adds a residual onto the input image,
so identity is available wherever nothing should change.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import AnalyzerConfig


@dataclass
class AnalyzerOutput:
    shadowfree_pred: torch.Tensor          # (B, 3, H, W) in [0, 1]
    shadow_mask_pred: torch.Tensor         # (B, 1, H, W) in (0, 1)
    feats_encoder: list[torch.Tensor]      # F_e, sizes descending
    feats_global: list[torch.Tensor]       # F_g, sizes ascending
    feats_spatial: list[torch.Tensor]      # F_s, sizes ascending
    style_s: torch.Tensor
    style_w: torch.Tensor
    noise_z: torch.Tensor


def pixel_norm(x: torch.Tensor, eps: float = 1e-8) -> torch.Tensor:
    return x / torch.sqrt(x.pow(2).mean(dim=-1, keepdim=True) + eps)


class MappingNetwork(nn.Module):
    """Noise z -> style w, with input normalization."""

    def __init__(self, noise_dim: int, style_dim: int, depth: int):
        super().__init__()
        layers: list[nn.Module] = []
        dim = noise_dim
        for _ in range(depth):
            layers += [nn.Linear(dim, style_dim), nn.GELU()]
            dim = style_dim
        self.net = nn.Sequential(*layers)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.net(pixel_norm(z))


class Encoder(nn.Module):
    def __init__(self, cfg: AnalyzerConfig):
        super().__init__()
        self.cfg = cfg
        blocks = []
        cin = 4
        for ch in cfg.pyramid_channels:
            blocks.append(
                nn.Sequential(
                    nn.Conv2d(cin, ch, 3, stride=2, padding=1),
                    nn.GELU(),
                    nn.Conv2d(ch, ch, 3, padding=1),
                    nn.GELU(),
                )
            )
            cin = ch
        self.blocks = nn.ModuleList(blocks)
        deep_sz = cfg.pyramid_sizes[-1]
        self.style_proj = nn.Linear(
            cfg.pyramid_channels[-1] * deep_sz * deep_sz, cfg.style_dim_s
        )

    def forward(self, image: torch.Tensor, object_mask: torch.Tensor):
        if object_mask.dim() == 3:
            object_mask = object_mask.unsqueeze(1)
        res = self.cfg.input_resolution
        if image.shape[-2:] != (res, res) or object_mask.shape[-2:] != (res, res):
            raise ValueError(
                f"input must be {res}x{res}, got image {tuple(image.shape[-2:])}, "
                f"mask {tuple(object_mask.shape[-2:])}"
            )
        x = torch.cat([image, object_mask], dim=1)
        feats = []
        for block in self.blocks:
            x = block(x)
            feats.append(x)
        s = self.style_proj(feats[-1].flatten(1))
        return feats, s


class GlobalBlock(nn.Module):
    """Conv then feature-wise scale/shift from the joint style code."""

    def __init__(self, cin: int, cout: int, style_dim: int):
        super().__init__()
        self.conv = nn.Conv2d(cin, cout, 3, padding=1)
        self.affine = nn.Linear(style_dim, 2 * cout)

    def forward(self, x: torch.Tensor, style: torch.Tensor) -> torch.Tensor:
        h = self.conv(x)
        scale, shift = self.affine(style).chunk(2, dim=1)
        h = h * (1.0 + scale[:, :, None, None]) + shift[:, :, None, None]
        return F.gelu(h)


class SpatialBlock(nn.Module):
    """Conv then per-pixel scale/shift predicted from the global branch."""

    def __init__(self, cin: int, cout: int, global_ch: int):
        super().__init__()
        self.conv = nn.Conv2d(cin, cout, 3, padding=1)
        self.mod = nn.Conv2d(global_ch, 2 * cout, 1)

    def forward(self, x: torch.Tensor, g: torch.Tensor) -> torch.Tensor:
        h = self.conv(x)
        scale, shift = self.mod(g).chunk(2, dim=1)
        h = h * (1.0 + scale) + shift
        return F.gelu(h)


class DualDecoder(nn.Module):
    """Parallel global/spatial decoders over the reversed pyramid."""

    def __init__(self, cfg: AnalyzerConfig):
        super().__init__()
        self.cfg = cfg
        style_dim = cfg.style_dim_s + cfg.style_dim_w
        sizes = list(reversed(cfg.pyramid_sizes))          # ascending
        chans = list(reversed(cfg.pyramid_channels))
        self.sizes = sizes
        g_blocks, s_blocks = [], []
        for i, (sz, ch) in enumerate(zip(sizes, chans)):
            if i == 0:
                cin = chans[0]                              # deepest encoder map
            else:
                cin = chans[i - 1] + ch                     # upsampled prev + skip
            g_blocks.append(GlobalBlock(cin, ch, style_dim))
            s_blocks.append(SpatialBlock(cin, ch, ch))
        self.g_blocks = nn.ModuleList(g_blocks)
        self.s_blocks = nn.ModuleList(s_blocks)
        out_ch = chans[-1]
        self.rgb_head = nn.Sequential(
            nn.Conv2d(out_ch, out_ch, 3, padding=1),
            nn.GELU(),
            nn.Conv2d(out_ch, 3, 3, padding=1),
        )
        # Keep the initial residual small so the clamp stays inactive and an
        # identity start point is near.
        with torch.no_grad():
            self.rgb_head[-1].weight.mul_(0.1)
            self.rgb_head[-1].bias.zero_()

    def forward(
        self,
        feats_encoder: list[torch.Tensor],
        style_s: torch.Tensor,
        style_w: torch.Tensor,
        image: torch.Tensor,
    ):
        if len(feats_encoder) != len(self.sizes):
            raise ValueError("encoder pyramid does not match decoder config")
        style = torch.cat([style_s, style_w], dim=1)
        skips = list(reversed(feats_encoder))               # ascending sizes
        f_g: list[torch.Tensor] = []
        f_s: list[torch.Tensor] = []
        g = s = None
        for i, (g_block, s_block) in enumerate(zip(self.g_blocks, self.s_blocks)):
            if i == 0:
                g_in = skips[0]
                s_in = skips[0]
            else:
                up_g = F.interpolate(g, scale_factor=2, mode="nearest")
                up_s = F.interpolate(s, scale_factor=2, mode="nearest")
                g_in = torch.cat([up_g, skips[i]], dim=1)
                s_in = torch.cat([up_s, skips[i]], dim=1)
            g = g_block(g_in, style)
            s = s_block(s_in, g)
            f_g.append(g)
            f_s.append(s)
        out = F.interpolate(s, scale_factor=2, mode="nearest")
        residual = self.rgb_head(out)
        pred = torch.clamp(image + residual, 0.0, 1.0)
        return f_g, f_s, pred


class ShadowDetector(nn.Module):
    """Multi-scale mask head over the spatial decoder's features."""

    def __init__(self, cfg: AnalyzerConfig):
        super().__init__()
        self.cfg = cfg
        self.merge_size = max(cfg.detector_input_sizes)
        cin = sum(cfg.channels_at(sz) for sz in cfg.detector_input_sizes)
        ch = cfg.detector_channels
        layers: list[nn.Module] = [
            nn.Conv2d(cin, ch, 3, padding=1),
            nn.BatchNorm2d(ch),
            nn.GELU(),
        ]
        size = self.merge_size
        while size < cfg.detector_output_size:
            layers += [
                nn.ConvTranspose2d(ch, ch, 4, stride=2, padding=1),
                nn.BatchNorm2d(ch),
                nn.GELU(),
                nn.Conv2d(ch, ch, 3, padding=1),
                nn.BatchNorm2d(ch),
                nn.GELU(),
            ]
            size *= 2
        layers.append(nn.Conv2d(ch, 1, 3, padding=1))
        self.net = nn.Sequential(*layers)

    def forward(self, feats_spatial: list[torch.Tensor]) -> torch.Tensor:
        chosen = []
        for f in feats_spatial:
            if f.shape[-1] in self.cfg.detector_input_sizes:
                chosen.append(
                    F.interpolate(
                        f, size=(self.merge_size, self.merge_size), mode="bilinear",
                        align_corners=False,
                    )
                )
        x = torch.cat(chosen, dim=1)
        logits = self.net(x)
        mask = torch.sigmoid(logits)
        res = self.cfg.input_resolution
        return F.interpolate(mask, size=(res, res), mode="bilinear", align_corners=False)


class PatchDiscriminator(nn.Module):
    """Strided conv stack on RGB + object mask, emitting a patch score map."""

    def __init__(self, cfg: AnalyzerConfig):
        super().__init__()
        layers: list[nn.Module] = []
        cin = 4
        for ch in cfg.disc_channels:
            layers += [nn.Conv2d(cin, ch, 4, stride=2, padding=1), nn.GELU()]
            cin = ch
        layers.append(nn.Conv2d(cin, 1, 3, padding=1))
        self.net = nn.Sequential(*layers)

    def forward(self, image: torch.Tensor, object_mask: torch.Tensor) -> torch.Tensor:
        if object_mask.dim() == 3:
            object_mask = object_mask.unsqueeze(1)
        return self.net(torch.cat([image, object_mask], dim=1))


class AnalyzerNet(nn.Module):
    def __init__(self, cfg: AnalyzerConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg)
        self.mapping = MappingNetwork(cfg.noise_dim, cfg.style_dim_w, cfg.mapping_depth)
        self.decoder = DualDecoder(cfg)
        self.detector = ShadowDetector(cfg)

    def encode(self, image: torch.Tensor, object_mask: torch.Tensor):
        return self.encoder(image, object_mask)

    def map_noise_to_style(self, z: torch.Tensor) -> torch.Tensor:
        return self.mapping(z)

    def decode(self, feats_encoder, style_s, style_w, image):
        return self.decoder(feats_encoder, style_s, style_w, image)

    def detect_shadow(self, feats_spatial) -> torch.Tensor:
        return self.detector(feats_spatial)

    def forward(
        self, image: torch.Tensor, object_mask: torch.Tensor, z: torch.Tensor
    ) -> AnalyzerOutput:
        feats_e, s = self.encode(image, object_mask)
        w = self.map_noise_to_style(z)
        f_g, f_s, pred = self.decode(feats_e, s, w, image)
        mask = self.detect_shadow(f_s)
        return AnalyzerOutput(
            shadowfree_pred=pred,
            shadow_mask_pred=mask,
            feats_encoder=feats_e,
            feats_global=f_g,
            feats_spatial=f_s,
            style_s=s,
            style_w=w,
            noise_z=z,
        )
