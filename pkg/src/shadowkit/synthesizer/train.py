"""Synthesizer training: frozen analyzer reference features, eps + mask loss,
split learning rates for the U-Net and the adaptor."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from scipy import ndimage

from ..analyzer.config import AnalyzerConfig
from ..analyzer.features import extract_shadow_features
from ..analyzer.losses import dice_loss
from ..analyzer.model import AnalyzerNet
from ..analyzer.train import load_analyzer
from ..checkpoint import load_checkpoint, restore_rng, rng_states, save_checkpoint
from ..data.augment import augment_shadow_drop
from ..world.spec import SceneSample
from .config import SynthesizerConfig
from .model import DenoiserUNet, embedding_source_baseline
from .sampling import SynthCondition
from .schedule import DiffusionSchedule, q_sample


class SynthTrainError(RuntimeError):
    pass


@dataclass
class SynthExample:
    """One precomputed training example at synthesizer resolution."""

    target: np.ndarray        # (H, W, 3)
    composite: np.ndarray     # (H, W, 3), target object's shadow removed
    object_mask: np.ndarray   # (H, W)
    shadow_mask: np.ndarray   # (H, W) GT shadow of the target object
    hint_mask: np.ndarray     # (H, W) dilated GT mask used as optional hint
    fms: np.ndarray           # (C, g, g) reference features (frozen analyzer)


@dataclass
class SynthTrainOptions:
    steps: int = 2000
    seed: int = 0
    batch_size: int | None = None
    embedding_mode: str = "analyzer"
    epochs: int | None = None       # defaults to cfg.epochs; drives the lr drop
    out_dir: str | Path = "runs/synthesizer"
    checkpoint_every: int = 0


@dataclass
class SynthTrainResult:
    checkpoint_path: Path
    log_path: Path
    loss_history: list[dict] = field(default_factory=list)


def unet_lr_for_epoch(
    epoch: int, total_epochs: int, base_lr: float, drop_factor: float
) -> float:
    """Base lr through the first half of the epoch budget, then dropped."""
    return base_lr if epoch <= total_epochs // 2 else base_lr * drop_factor


def _resize_image(img: np.ndarray, size: int) -> np.ndarray:
    t = torch.from_numpy(img.astype(np.float32)).permute(2, 0, 1)[None]
    out = F.interpolate(t, size=(size, size), mode="area")
    return out[0].permute(1, 2, 0).numpy().astype(np.float64)


def _resize_mask(mask: np.ndarray, size: int) -> np.ndarray:
    t = torch.from_numpy(mask.astype(np.float32))[None, None]
    out = F.interpolate(t, size=(size, size), mode="area")
    return out[0, 0].numpy().astype(np.float64)


def weights_fingerprint(net: torch.nn.Module) -> str:
    h = hashlib.sha256()
    for name, p in sorted(net.state_dict().items()):
        h.update(name.encode())
        h.update(p.detach().cpu().numpy().tobytes())
    return h.hexdigest()


def reference_features(
    analyzer: AnalyzerNet,
    analyzer_cfg: AnalyzerConfig,
    image: np.ndarray,
    object_mask: np.ndarray,
    z_seed: int,
) -> np.ndarray:
    """Frozen-analyzer feature block for one reference view."""
    analyzer.eval()
    with torch.no_grad():
        img = torch.from_numpy(image.astype(np.float32)).permute(2, 0, 1)[None]
        m = torch.from_numpy(object_mask.astype(np.float32))[None, None]
        z = torch.randn(
            1, analyzer_cfg.noise_dim,
            generator=torch.Generator().manual_seed(z_seed),
        )
        out = analyzer(img, m, z)
        fms = extract_shadow_features(out.feats_spatial, analyzer_cfg)
    return fms[0].numpy().astype(np.float64)


def build_examples_from_pairs(
    pairs: list[tuple[SceneSample, SceneSample, int]],
    analyzer: AnalyzerNet,
    analyzer_cfg: AnalyzerConfig,
    synth_cfg: SynthesizerConfig,
    seed: int = 0,
) -> list[SynthExample]:
    """Relocation pairs -> training examples.

    The reference is the before-view of the moved object; the composite is
    the after-view with that object's shadow removed.
    """
    examples = []
    for i, (before, after, obj_idx) in enumerate(pairs):
        fms = reference_features(
            analyzer,
            analyzer_cfg,
            before.image_shadowed,
            before.object_masks[obj_idx],
            z_seed=seed + i,
        )
        composite_full = augment_shadow_drop(after, obj_idx).image_shadowed
        size = synth_cfg.resolution
        shadow_small = _resize_mask(after.shadow_masks[obj_idx], size)
        hint = ndimage.binary_dilation(
            shadow_small > 0.5, iterations=synth_cfg.hint_dilate_px
        ).astype(np.float64)
        examples.append(
            SynthExample(
                target=_resize_image(after.image_shadowed, size),
                composite=_resize_image(composite_full, size),
                object_mask=_resize_mask(after.object_masks[obj_idx], size),
                shadow_mask=shadow_small,
                hint_mask=hint,
                fms=fms,
            )
        )
    return examples


def build_examples_from_scenes(
    samples: list[SceneSample],
    analyzer: AnalyzerNet,
    analyzer_cfg: AnalyzerConfig,
    synth_cfg: SynthesizerConfig,
    rng: np.random.Generator,
    seed: int = 0,
) -> list[SynthExample]:
    """Multi-object scenes -> training examples; the reference is a randomly
    chosen other object in the same image."""
    examples = []
    for i, sample in enumerate(samples):
        n = len(sample.object_masks)
        if n < 2:
            continue
        target_idx = int(rng.integers(0, n))
        others = [k for k in range(n) if k != target_idx]
        ref_idx = int(others[rng.integers(0, len(others))])
        fms = reference_features(
            analyzer,
            analyzer_cfg,
            sample.image_shadowed,
            sample.object_masks[ref_idx],
            z_seed=seed + i,
        )
        composite_full = augment_shadow_drop(sample, target_idx).image_shadowed
        size = synth_cfg.resolution
        shadow_small = _resize_mask(sample.shadow_masks[target_idx], size)
        hint = ndimage.binary_dilation(
            shadow_small > 0.5, iterations=synth_cfg.hint_dilate_px
        ).astype(np.float64)
        examples.append(
            SynthExample(
                target=_resize_image(sample.image_shadowed, size),
                composite=_resize_image(composite_full, size),
                object_mask=_resize_mask(sample.object_masks[target_idx], size),
                shadow_mask=shadow_small,
                hint_mask=hint,
                fms=fms,
            )
        )
    return examples


def _stack_batch(
    examples: list[SynthExample],
    indices: np.ndarray,
    hint_on: np.ndarray,
    provider: torch.nn.Module,
    dtype=torch.float32,
):
    sel = [examples[i] for i in indices]
    target = torch.stack(
        [torch.from_numpy(e.target.astype(np.float32)).permute(2, 0, 1) for e in sel]
    ).to(dtype)
    composite = torch.stack(
        [torch.from_numpy(e.composite.astype(np.float32)).permute(2, 0, 1) for e in sel]
    ).to(dtype)
    obj = torch.stack(
        [torch.from_numpy(e.object_mask.astype(np.float32))[None] for e in sel]
    ).to(dtype)
    shadow = torch.stack(
        [torch.from_numpy(e.shadow_mask.astype(np.float32))[None] for e in sel]
    ).to(dtype)
    hint = torch.stack(
        [
            torch.from_numpy(
                (e.hint_mask if on else np.zeros_like(e.hint_mask)).astype(np.float32)
            )[None]
            for e, on in zip(sel, hint_on)
        ]
    ).to(dtype)
    fms = torch.stack(
        [torch.from_numpy(e.fms.astype(np.float32)) for e in sel]
    ).to(dtype)
    tokens = provider(fms)
    cond = SynthCondition(composite=composite, object_mask=obj, shadow_hint=hint, tokens=tokens)
    return target, shadow, cond


def synth_loss(
    net: DenoiserUNet,
    target: torch.Tensor,
    gt_shadow_mask: torch.Tensor,
    cond: SynthCondition,
    schedule: DiffusionSchedule,
    gen: torch.Generator,
    lambda_mask: float,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(total, eps_term, mask_term) for one batch with uniform timesteps."""
    b = target.shape[0]
    t = torch.randint(0, schedule.timesteps, (b,), generator=gen)
    eps = torch.randn(target.shape, generator=gen, dtype=target.dtype)
    x_t = q_sample(target, t, eps, schedule)
    eps_pred, mask_pred = net(
        x_t, cond.composite, cond.object_mask, cond.shadow_hint, t, cond.tokens
    )
    eps_term = F.mse_loss(eps_pred, eps)
    mask_term = dice_loss(mask_pred, gt_shadow_mask)
    return eps_term + lambda_mask * mask_term, eps_term, mask_term


def train_synthesizer(
    cfg: SynthesizerConfig,
    analyzer_ckpt: str | Path,
    pairs: list[tuple[SceneSample, SceneSample, int]],
    options: SynthTrainOptions,
    resume_from: str | Path | None = None,
    examples: list[SynthExample] | None = None,
) -> SynthTrainResult:
    """Train the denoiser + embedding provider against a frozen analyzer.

    `pairs` are relocation (before, after, object_index) triples; callers
    may instead pass precomputed `examples`.
    """
    out_dir = Path(options.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    analyzer, analyzer_cfg = load_analyzer(analyzer_ckpt)
    for p in analyzer.parameters():
        p.requires_grad_(False)
    fingerprint_before = weights_fingerprint(analyzer)

    if examples is None:
        examples = build_examples_from_pairs(
            pairs, analyzer, analyzer_cfg, cfg, seed=options.seed
        )
    if not examples:
        raise SynthTrainError("no training examples")
    if examples[0].fms.shape[0] != cfg.fms_channels:
        raise SynthTrainError(
            f"analyzer feature block ({examples[0].fms.shape[0]} ch) does not "
            f"match synthesizer preset ({cfg.fms_channels} ch)"
        )

    batch_size = options.batch_size or min(cfg.batch_size, len(examples))
    total_epochs = options.epochs or cfg.epochs
    steps_per_epoch = max(1, len(examples) // batch_size)

    torch.manual_seed(options.seed)
    net = DenoiserUNet(cfg)
    provider = embedding_source_baseline(options.embedding_mode, cfg)
    schedule = DiffusionSchedule.linear(cfg.timesteps, cfg.beta_start, cfg.beta_end)

    opt = torch.optim.Adam(
        [
            {"params": net.parameters(), "lr": cfg.lr},
            {"params": provider.parameters(), "lr": cfg.lr},
        ],
        betas=(0.9, 0.999),
    )
    data_rng = np.random.default_rng(options.seed)
    noise_gen = torch.Generator().manual_seed(options.seed + 1)
    start_step = 0
    if resume_from is not None:
        payload = load_checkpoint(resume_from, expected_kind="synthesizer")
        net.load_state_dict(payload["models"]["unet"])
        provider.load_state_dict(payload["models"]["embedding"])
        opt.load_state_dict(payload["optimizers"]["main"])
        restore_rng(payload["rng"], data_rng, {"noise": noise_gen})
        start_step = payload["step"]

    log_path = out_dir / "train_log.jsonl"
    log_file = open(log_path, "a" if resume_from else "w")
    history: list[dict] = []

    def write_ckpt(path: Path, step: int) -> Path:
        return save_checkpoint(
            path,
            kind="synthesizer",
            config=cfg.to_json_dict(),
            models={"unet": net.state_dict(), "embedding": provider.state_dict()},
            optimizers={"main": opt.state_dict()},
            rng=rng_states(data_rng, {"noise": noise_gen}),
            step=step,
            extra={
                "embedding_mode": options.embedding_mode,
                "analyzer_fingerprint": fingerprint_before,
                "analyzer_config": analyzer_cfg.to_json_dict(),
            },
        )

    net.train()
    provider.train()
    try:
        for step in range(start_step, options.steps):
            epoch = step // steps_per_epoch
            opt.param_groups[0]["lr"] = unet_lr_for_epoch(
                epoch, total_epochs, cfg.lr, cfg.lr_drop_factor
            )
            opt.param_groups[1]["lr"] = cfg.lr  # adaptor lr stays constant

            indices = data_rng.integers(0, len(examples), size=batch_size)
            hint_on = data_rng.random(batch_size) < cfg.hint_prob
            target, shadow, cond = _stack_batch(examples, indices, hint_on, provider)
            total, eps_term, mask_term = synth_loss(
                net, target, shadow, cond, schedule, noise_gen, cfg.lambda_mask
            )
            if not torch.isfinite(total):
                raise SynthTrainError(f"non-finite loss at step {step}")
            opt.zero_grad(set_to_none=True)
            total.backward()
            opt.step()
            record = {
                "step": step,
                "epoch": epoch,
                "total": float(total.detach()),
                "eps": float(eps_term.detach()),
                "mask": float(mask_term.detach()),
                "lr_unet": opt.param_groups[0]["lr"],
            }
            history.append(record)
            log_file.write(json.dumps(record) + "\n")
            if (
                options.checkpoint_every
                and (step + 1) % options.checkpoint_every == 0
                and step + 1 < options.steps
            ):
                write_ckpt(out_dir / f"ckpt_step{step + 1:06d}.pt", step + 1)
    finally:
        log_file.close()

    if weights_fingerprint(analyzer) != fingerprint_before:
        raise SynthTrainError("analyzer weights changed during training")
    ckpt_path = write_ckpt(out_dir / "synthesizer.pt", options.steps)
    return SynthTrainResult(ckpt_path, log_path, history)


def load_synthesizer(path: str | Path):
    """(net, provider, cfg, embedding_mode) in eval mode."""
    payload = load_checkpoint(path, expected_kind="synthesizer")
    cfg = SynthesizerConfig.from_json_dict(payload["config"])
    net = DenoiserUNet(cfg)
    net.load_state_dict(payload["models"]["unet"])
    net.eval()
    mode = payload["extra"]["embedding_mode"]
    provider = embedding_source_baseline(mode, cfg)
    provider.load_state_dict(payload["models"]["embedding"])
    provider.eval()
    return net, provider, cfg, mode
