"""Analyzer training loop: alternating generator/discriminator Adam steps
with lazy masked-R1, JSONL loss logging, and bit-exact resume."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..checkpoint import load_checkpoint, restore_rng, rng_states, save_checkpoint
from ..data.augment import AugmentationParams
from ..data.policy import AnalyzerBatch, PolicySource, SamplingPolicy, sample_analyzer_batch
from ..world.spec import SceneSample
from .config import AnalyzerConfig
from .losses import PerceptualFeatures, analyzer_loss
from .model import AnalyzerNet, PatchDiscriminator


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class AnalyzerTrainOptions:
    steps: int = 1000
    seed: int = 0
    batch_size: int | None = None
    lr: float | None = None
    p_empty_object_mask: float = 0.3
    augment: AugmentationParams | None = None
    checkpoint_every: int = 0        # 0: only at the end
    out_dir: str | Path = "runs/analyzer"


@dataclass
class AnalyzerTrainResult:
    checkpoint_path: Path
    log_path: Path
    loss_history: list[dict] = field(default_factory=list)


def batch_to_tensors(batch: AnalyzerBatch, device="cpu"):
    images = torch.from_numpy(batch.images).permute(0, 3, 1, 2).to(device)
    obj = torch.from_numpy(batch.object_masks).unsqueeze(1).to(device)
    tgt_img = torch.from_numpy(batch.target_images).permute(0, 3, 1, 2).to(device)
    tgt_mask = torch.from_numpy(batch.target_masks).unsqueeze(1).to(device)
    return images, obj, tgt_img, tgt_mask


def _as_policy(
    dataset: list[SceneSample] | SamplingPolicy, batch_size: int, p_empty: float
) -> SamplingPolicy:
    if isinstance(dataset, SamplingPolicy):
        return dataset
    return SamplingPolicy(
        sources=[PolicySource(list(dataset), "full", 1)],
        p_empty_object_mask=p_empty,
        batch_size=batch_size,
    )


def _dump_diagnostics(out_dir: Path, step: int, batch: AnalyzerBatch, components: dict):
    diag_dir = out_dir / "diagnostics"
    diag_dir.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        diag_dir / f"nan_batch_step{step}.npz",
        images=batch.images,
        object_masks=batch.object_masks,
        target_images=batch.target_images,
        target_masks=batch.target_masks,
    )
    (diag_dir / f"nan_losses_step{step}.json").write_text(
        json.dumps(components, indent=2)
    )


def train_analyzer(
    cfg: AnalyzerConfig,
    dataset: list[SceneSample] | SamplingPolicy,
    options: AnalyzerTrainOptions,
    resume_from: str | Path | None = None,
) -> AnalyzerTrainResult:
    out_dir = Path(options.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    batch_size = options.batch_size or cfg.batch_size
    lr = options.lr or cfg.lr
    policy = _as_policy(dataset, batch_size, options.p_empty_object_mask)
    policy.batch_size = batch_size

    torch.manual_seed(options.seed)
    net = AnalyzerNet(cfg)
    disc = PatchDiscriminator(cfg)
    perceptual = PerceptualFeatures(seed=0)
    opt_g = torch.optim.Adam(net.parameters(), lr=lr, betas=(0.5, 0.99))
    opt_d = torch.optim.Adam(disc.parameters(), lr=lr, betas=(0.5, 0.99))

    data_rng = np.random.default_rng(options.seed)
    noise_gen = torch.Generator().manual_seed(options.seed + 1)
    start_step = 0

    if resume_from is not None:
        payload = load_checkpoint(resume_from, expected_kind="analyzer")
        net.load_state_dict(payload["models"]["analyzer"])
        disc.load_state_dict(payload["models"]["discriminator"])
        opt_g.load_state_dict(payload["optimizers"]["generator"])
        opt_d.load_state_dict(payload["optimizers"]["discriminator"])
        restore_rng(payload["rng"], data_rng, {"noise": noise_gen})
        start_step = payload["step"]

    log_path = out_dir / "train_log.jsonl"
    log_file = open(log_path, "a" if resume_from else "w")
    history: list[dict] = []

    def write_ckpt(path: Path, step: int) -> Path:
        return save_checkpoint(
            path,
            kind="analyzer",
            config=cfg.to_json_dict(),
            models={
                "analyzer": net.state_dict(),
                "discriminator": disc.state_dict(),
            },
            optimizers={
                "generator": opt_g.state_dict(),
                "discriminator": opt_d.state_dict(),
            },
            rng=rng_states(data_rng, {"noise": noise_gen}),
            step=step,
            extra={"seed": options.seed},
        )

    net.train()
    disc.train()
    try:
        for step in range(start_step, options.steps):
            with_r1 = cfg.r1_interval > 0 and step % cfg.r1_interval == 0
            batch = sample_analyzer_batch(policy, data_rng, options.augment)
            images, obj, tgt_img, tgt_mask = batch_to_tensors(batch)
            z = torch.randn(
                images.shape[0], cfg.noise_dim, generator=noise_gen
            )
            out = net(images, obj, z)
            bundle = analyzer_loss(
                out, tgt_img, tgt_mask, obj, disc, perceptual, cfg, with_r1=with_r1
            )
            if not (
                torch.isfinite(bundle.generator_total)
                and torch.isfinite(bundle.discriminator_total)
            ):
                _dump_diagnostics(out_dir, step, batch, bundle.components)
                raise TrainingDiverged(
                    f"non-finite loss at step {step}; batch dumped to "
                    f"{out_dir / 'diagnostics'}"
                )
            opt_g.zero_grad(set_to_none=True)
            opt_d.zero_grad(set_to_none=True)
            bundle.generator_total.backward()
            opt_d.zero_grad(set_to_none=True)
            bundle.discriminator_total.backward()
            opt_g.step()
            opt_d.step()

            record = {"step": step, **bundle.components}
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

    ckpt_path = write_ckpt(out_dir / "analyzer.pt", options.steps)
    return AnalyzerTrainResult(ckpt_path, log_path, history)


def load_analyzer(path: str | Path) -> tuple[AnalyzerNet, AnalyzerConfig]:
    """Load an analyzer checkpoint for inference (eval mode)."""
    payload = load_checkpoint(path, expected_kind="analyzer")
    cfg = AnalyzerConfig.from_json_dict(payload["config"])
    net = AnalyzerNet(cfg)
    net.load_state_dict(payload["models"]["analyzer"])
    net.eval()
    return net, cfg
