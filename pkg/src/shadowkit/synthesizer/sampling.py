"""Deterministic few-step sampler (eta=0 DDIM-style updates)."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .model import DenoiserUNet
from .schedule import DiffusionSchedule, few_step_timesteps, from_signal, to_signal


@dataclass
class SynthCondition:
    """Everything the denoiser sees except the target: the composite image,
    the object mask, an optional shadow-region hint (all-zeros = absent),
    and the conditioning token block."""

    composite: torch.Tensor     # (B, 3, H, W) in [0, 1]
    object_mask: torch.Tensor   # (B, 1, H, W)
    shadow_hint: torch.Tensor   # (B, 1, H, W)
    tokens: torch.Tensor        # (B, tokens, embed_dim)


def denoise_step(
    net: DenoiserUNet, x_t: torch.Tensor, cond: SynthCondition, t: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """One denoiser evaluation: (eps_pred, mask_pred)."""
    return net(x_t, cond.composite, cond.object_mask, cond.shadow_hint, t, cond.tokens)


@torch.no_grad()
def sample_few_step(
    net: DenoiserUNet,
    cond: SynthCondition,
    schedule: DiffusionSchedule,
    steps: int = 4,
    seed: int = 0,
    keep_region: torch.Tensor | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Generate an image (and final mask prediction) in a few steps.

    Deterministic given the seed: the only randomness is the initial noise;
    updates clamp the x0 estimate to [-1,1] each step. When keep_region is
    given, pixels outside it are reset to the composite at every step.
    """
    net.eval()
    ts = few_step_timesteps(schedule.timesteps, steps)
    b = cond.composite.shape[0]
    h = cond.composite.shape[-1]
    gen = torch.Generator().manual_seed(seed)
    x = torch.randn(
        (b, 3, cond.composite.shape[-2], h), generator=gen,
        dtype=cond.composite.dtype,
    )
    ab = schedule.alpha_bar.to(x.dtype)
    comp_signal = to_signal(cond.composite)
    mask_pred = torch.zeros_like(cond.object_mask)
    for i, t in enumerate(ts):
        t_tensor = torch.full((b,), t, dtype=torch.long)
        eps_pred, mask_pred = denoise_step(net, x, cond, t_tensor)
        x0 = (x - torch.sqrt(1.0 - ab[t]) * eps_pred) / torch.sqrt(ab[t])
        x0 = torch.clamp(x0, -1.0, 1.0)
        if keep_region is not None:
            region = (keep_region > 0.5).to(x0.dtype)
            x0 = region * x0 + (1.0 - region) * comp_signal
        if i + 1 < len(ts):
            t_next = ts[i + 1]
            x = torch.sqrt(ab[t_next]) * x0 + torch.sqrt(1.0 - ab[t_next]) * eps_pred
        else:
            x = x0
    return from_signal(x), mask_pred
