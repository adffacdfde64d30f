"""Conditional denoising U-Net with cross-attention over shadow tokens.

Input is the 8-channel concat [x_t, composite, object_mask, shadow_hint];
the two lowest resolutions attend to the token block produced by the
adaptor (or by a learned-constant baseline). Two heads: noise prediction
and a sigmoid shadow mask.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import SynthesizerConfig

IN_CHANNELS = 8  # x_t(3) + composite(3) + object_mask(1) + shadow_hint(1)


def timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Standard sinusoidal embedding; t is a (B,) tensor of step indices."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0)
        * torch.arange(half, dtype=torch.float64, device=t.device)
        / half
    )
    args = t.to(torch.float64)[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=1)
    if dim % 2:
        emb = F.pad(emb, (0, 1))
    return emb


def _norm(ch: int) -> nn.GroupNorm:
    groups = 8
    while ch % groups != 0:
        groups //= 2
    return nn.GroupNorm(groups, ch)


class ResBlock(nn.Module):
    def __init__(self, cin: int, cout: int, time_dim: int):
        super().__init__()
        self.norm1 = _norm(cin)
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.time_proj = nn.Linear(time_dim, cout)
        self.norm2 = _norm(cout)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.skip = nn.Conv2d(cin, cout, 1) if cin != cout else nn.Identity()

    def forward(self, x: torch.Tensor, temb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.time_proj(F.silu(temb))[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return h + self.skip(x)


class CrossAttention(nn.Module):
    """Queries from the feature map, keys/values from the token block."""

    def __init__(self, ch: int, embed_dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.norm = _norm(ch)
        self.to_q = nn.Conv2d(ch, ch, 1)
        self.to_k = nn.Linear(embed_dim, ch)
        self.to_v = nn.Linear(embed_dim, ch)
        self.proj = nn.Conv2d(ch, ch, 1)

    def forward(self, x: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        hd = c // self.heads
        q = self.to_q(self.norm(x)).reshape(b, self.heads, hd, h * w)
        k = self.to_k(tokens).reshape(b, -1, self.heads, hd).permute(0, 2, 3, 1)
        v = self.to_v(tokens).reshape(b, -1, self.heads, hd).permute(0, 2, 3, 1)
        attn = torch.softmax(
            torch.einsum("bhcq,bhck->bhqk", q, k) / math.sqrt(hd), dim=-1
        )
        out = torch.einsum("bhqk,bhck->bhcq", attn, v).reshape(b, c, h, w)
        return x + self.proj(out)


class DenoiserUNet(nn.Module):
    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        self.cfg = cfg
        chans = cfg.base_channels
        levels = len(chans)
        attn_set = set(range(levels - cfg.attn_levels, levels))
        tdim = cfg.time_dim
        self.time_mlp = nn.Sequential(
            nn.Linear(tdim, tdim), nn.SiLU(), nn.Linear(tdim, tdim)
        )
        self.stem = nn.Conv2d(IN_CHANNELS, chans[0], 3, padding=1)

        self.down_blocks = nn.ModuleList()
        self.down_attn = nn.ModuleList()
        self.downsamples = nn.ModuleList()
        for i in range(levels):
            cin = chans[max(i - 1, 0)] if i > 0 else chans[0]
            self.down_blocks.append(ResBlock(cin, chans[i], tdim))
            self.down_attn.append(
                CrossAttention(chans[i], cfg.embed_dim, cfg.heads)
                if i in attn_set
                else None
            )
            self.downsamples.append(
                nn.Conv2d(chans[i], chans[i], 3, stride=2, padding=1)
                if i < levels - 1
                else None
            )

        self.mid1 = ResBlock(chans[-1], chans[-1], tdim)
        self.mid_attn = CrossAttention(chans[-1], cfg.embed_dim, cfg.heads)
        self.mid2 = ResBlock(chans[-1], chans[-1], tdim)

        self.up_blocks = nn.ModuleList()
        self.up_attn = nn.ModuleList()
        for i in range(levels - 1, 0, -1):
            self.up_blocks.append(
                ResBlock(chans[i] + chans[i - 1], chans[i - 1], tdim)
            )
            self.up_attn.append(
                CrossAttention(chans[i - 1], cfg.embed_dim, cfg.heads)
                if (i - 1) in attn_set
                else None
            )

        out_ch = chans[0]
        self.eps_head = nn.Sequential(
            _norm(out_ch), nn.SiLU(), nn.Conv2d(out_ch, 3, 3, padding=1)
        )
        self.mask_head = nn.Sequential(
            _norm(out_ch), nn.SiLU(), nn.Conv2d(out_ch, 1, 3, padding=1)
        )

    def forward(
        self,
        x_t: torch.Tensor,
        composite: torch.Tensor,
        object_mask: torch.Tensor,
        shadow_hint: torch.Tensor,
        t: torch.Tensor,
        tokens: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        if object_mask.dim() == 3:
            object_mask = object_mask.unsqueeze(1)
        if shadow_hint.dim() == 3:
            shadow_hint = shadow_hint.unsqueeze(1)
        if t.dim() == 0:
            t = t.expand(x_t.shape[0])
        temb = self.time_mlp(
            timestep_embedding(t, self.cfg.time_dim).to(x_t.dtype)
        )
        x = self.stem(torch.cat([x_t, composite, object_mask, shadow_hint], dim=1))
        skips = []
        for block, attn, down in zip(self.down_blocks, self.down_attn, self.downsamples):
            x = block(x, temb)
            if attn is not None:
                x = attn(x, tokens)
            skips.append(x)
            if down is not None:
                x = down(x)
        x = self.mid1(x, temb)
        x = self.mid_attn(x, tokens)
        x = self.mid2(x, temb)
        for j, (block, attn) in enumerate(zip(self.up_blocks, self.up_attn)):
            skip = skips[len(skips) - 2 - j]
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = block(torch.cat([x, skip], dim=1), temb)
            if attn is not None:
                x = attn(x, tokens)
        return self.eps_head(x), torch.sigmoid(self.mask_head(x))


class Adaptor(nn.Module):
    """Feature block -> token sequence: 2D conv, flatten to tokens, 1D conv
    over the token axis, then a per-token MLP lifting the channel dim."""

    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        c = cfg.fms_channels
        self.cfg = cfg
        self.conv2d = nn.Conv2d(c, c, 3, padding=1)
        self.conv1d = nn.Conv1d(c, c, 3, padding=1)
        self.mlp = nn.Sequential(
            nn.Linear(c, cfg.embed_dim), nn.GELU(),
            nn.Linear(cfg.embed_dim, cfg.embed_dim),
        )

    def forward(self, fms: torch.Tensor) -> torch.Tensor:
        if fms.shape[1] != self.cfg.fms_channels:
            raise ValueError(
                f"feature block has {fms.shape[1]} channels, preset expects "
                f"{self.cfg.fms_channels}"
            )
        if fms.shape[-1] != self.cfg.fms_grid:
            raise ValueError(
                f"feature grid {fms.shape[-1]} != preset grid {self.cfg.fms_grid}"
            )
        h = F.gelu(self.conv2d(fms))
        h = h.flatten(2)                      # (B, C, tokens)
        h = F.gelu(self.conv1d(h))
        return self.mlp(h.transpose(1, 2))    # (B, tokens, embed_dim)


class ConstantEmbedding(nn.Module):
    """Trainable token block independent of the reference: ablation control."""

    def __init__(self, cfg: SynthesizerConfig):
        super().__init__()
        self.cfg = cfg
        self.tokens = nn.Parameter(
            torch.randn(cfg.embed_tokens, cfg.embed_dim) * 0.02
        )

    def forward(self, fms: torch.Tensor) -> torch.Tensor:
        return self.tokens[None].expand(fms.shape[0], -1, -1).to(fms.dtype)


EMBEDDING_MODES = ("analyzer", "learned_constant")


def embedding_source_baseline(mode: str, cfg: SynthesizerConfig) -> nn.Module:
    """Token provider for the given conditioning mode."""
    if mode == "analyzer":
        return Adaptor(cfg)
    if mode == "learned_constant":
        return ConstantEmbedding(cfg)
    raise ValueError(f"unknown embedding mode {mode!r}")
