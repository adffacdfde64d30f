"""Analyzer training losses: L1 + perceptual + non-saturating adversarial +
dice, with masked R1 regularization on the discriminator."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import AnalyzerConfig

DICE_EPS = 1.0


def dice_loss(pred: torch.Tensor, gt: torch.Tensor, eps: float = DICE_EPS) -> torch.Tensor:
    """1 - (2*sum(pred*gt)+eps)/(sum(pred)+sum(gt)+eps), summed per sample.

    Accepts (H,W), (B,H,W) or (B,1,H,W); batched inputs average per-sample
    values.
    """
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {tuple(pred.shape)} vs {tuple(gt.shape)}")
    if pred.dim() == 2:
        pred = pred.unsqueeze(0)
        gt = gt.unsqueeze(0)
    b = pred.shape[0]
    p = pred.reshape(b, -1)
    g = gt.reshape(b, -1)
    inter = (p * g).sum(dim=1)
    denom = p.sum(dim=1) + g.sum(dim=1)
    return (1.0 - (2.0 * inter + eps) / (denom + eps)).mean()


class PerceptualFeatures(nn.Module):
    """Frozen 4-level conv pyramid with seed-0 random weights.

    No pretrained downloads: the random projection is fixed, so the L1
    feature distance is a deterministic positive-definite-enough similarity.
    """

    LEVELS = ((3, 16), (16, 32), (32, 64), (64, 64))

    def __init__(self, seed: int = 0):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        blocks = []
        for cin, cout in self.LEVELS:
            conv = nn.Conv2d(cin, cout, 3, stride=2, padding=1)
            with torch.no_grad():
                std = (2.0 / (cin * 9)) ** 0.5
                conv.weight.copy_(
                    torch.randn(conv.weight.shape, generator=gen) * std
                )
                conv.bias.zero_()
            blocks.append(conv)
        self.blocks = nn.ModuleList(blocks)
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        feats = []
        for block in self.blocks:
            x = F.gelu(block(x))
            feats.append(x)
        return feats


def perceptual_loss(
    a: torch.Tensor, b: torch.Tensor, extractor: PerceptualFeatures
) -> torch.Tensor:
    """Mean L1 distance between frozen feature pyramids; zero iff a == b."""
    fa = extractor(a)
    fb = extractor(b)
    total = a.new_zeros(())
    for x, y in zip(fa, fb):
        total = total + (x - y).abs().mean()
    return total


def adversarial_g_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator loss."""
    return F.softplus(-fake_scores).mean()


def adversarial_d_loss(
    real_scores: torch.Tensor, fake_scores: torch.Tensor
) -> torch.Tensor:
    return F.softplus(-real_scores).mean() + F.softplus(fake_scores).mean()


def masked_r1(
    discriminator: nn.Module,
    real_image: torch.Tensor,
    object_mask: torch.Tensor,
    region_mask: torch.Tensor,
    gamma: float,
) -> torch.Tensor:
    """(gamma/2) * mean over region pixels of ||d score / d image||^2.

    The mean runs over pixels where region_mask > 0.5 (squared gradient
    summed over channels first), so an all-ones region reproduces plain R1
    and an empty region contributes exactly zero.
    """
    image = real_image.detach().requires_grad_(True)
    scores = discriminator(image, object_mask)
    (grad,) = torch.autograd.grad(
        outputs=scores.sum(), inputs=image, create_graph=True
    )
    grad_sq = grad.pow(2).sum(dim=1)  # (B, H, W)
    if region_mask.dim() == 4:
        region_mask = region_mask.squeeze(1)
    region = (region_mask > 0.5).to(grad_sq.dtype)
    denom = region.sum()
    if denom.item() == 0:
        return grad_sq.sum() * 0.0
    return (gamma / 2.0) * (grad_sq * region).sum() / denom


@dataclass
class LossBundle:
    generator_total: torch.Tensor
    discriminator_total: torch.Tensor
    components: dict[str, float]


def analyzer_loss(
    outputs,
    target_image: torch.Tensor,
    target_mask: torch.Tensor,
    object_mask: torch.Tensor,
    discriminator: nn.Module,
    perceptual: PerceptualFeatures,
    cfg: AnalyzerConfig,
    with_r1: bool = False,
) -> LossBundle:
    """Combine all loss terms for one batch.

    The R1 region is the union of the GT shadow mask and the object mask.
    The discriminator term detaches the generator output, so the two totals
    can be backpropagated independently.
    """
    pred = outputs.shadowfree_pred
    mask_pred = outputs.shadow_mask_pred
    if target_mask.dim() == 3:
        target_mask = target_mask.unsqueeze(1)

    l1 = (pred - target_image).abs().mean()
    perc = perceptual_loss(pred, target_image, perceptual)
    dice = dice_loss(mask_pred, target_mask)

    fake_scores_g = discriminator(pred, object_mask)
    adv_g = adversarial_g_loss(fake_scores_g)

    real_scores = discriminator(target_image, object_mask)
    fake_scores_d = discriminator(pred.detach(), object_mask)
    adv_d = adversarial_d_loss(real_scores, fake_scores_d)

    g_total = (
        cfg.lambda_l1 * l1
        + cfg.lambda_perc * perc
        + cfg.lambda_adv * adv_g
        + cfg.lambda_dice * dice
    )
    d_total = adv_d
    components = {
        "l1": float(l1.detach()),
        "perceptual": float(perc.detach()),
        "adv_g": float(adv_g.detach()),
        "dice": float(dice.detach()),
        "adv_d": float(adv_d.detach()),
    }
    if with_r1:
        om = object_mask if object_mask.dim() == 4 else object_mask.unsqueeze(1)
        region = torch.maximum(target_mask, om)
        r1 = masked_r1(discriminator, target_image, object_mask, region, cfg.r1_gamma)
        d_total = d_total + r1
        components["masked_r1"] = float(r1.detach())
    components["generator_total"] = float(g_total.detach())
    components["discriminator_total"] = float(d_total.detach())
    return LossBundle(g_total, d_total, components)
