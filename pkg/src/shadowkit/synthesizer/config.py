"""Synthesizer configuration and presets (paired with the analyzer presets)."""

from __future__ import annotations

from dataclasses import dataclass, asdict


class SynthConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthesizerConfig:
    name: str
    resolution: int
    base_channels: tuple[int, ...]   # per level; level i runs at resolution/2^i
    embed_dim: int
    fms_channels: int                # channels of the analyzer feature block
    fms_grid: int                    # token grid side; tokens = grid^2
    attn_levels: int = 2             # cross-attention at the N lowest resolutions
    time_dim: int = 128
    heads: int = 4
    timesteps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    lambda_mask: float = 1.0
    lr: float = 1e-4
    lr_drop_factor: float = 0.01
    epochs: int = 400
    batch_size: int = 64
    hint_prob: float = 0.5
    hint_dilate_px: int = 3

    def __post_init__(self):
        if len(self.base_channels) < 2:
            raise SynthConfigError("need at least two U-Net levels")
        if self.resolution % (2 ** (len(self.base_channels) - 1)) != 0:
            raise SynthConfigError("resolution must be divisible by the level count")
        if not 1 <= self.attn_levels <= len(self.base_channels):
            raise SynthConfigError("attn_levels out of range")
        for ch in self.base_channels[-self.attn_levels:]:
            if ch % self.heads != 0:
                raise SynthConfigError(
                    f"attention channels {ch} must divide into {self.heads} heads"
                )

    @property
    def embed_tokens(self) -> int:
        return self.fms_grid**2

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "SynthesizerConfig":
        d = dict(d)
        d["base_channels"] = tuple(d["base_channels"])
        return cls(**d)


def paper_preset() -> SynthesizerConfig:
    # Tokens 32^2=1024 at dim 2048, lifted from the 1344-channel block.
    return SynthesizerConfig(
        name="paper",
        resolution=128,
        base_channels=(64, 128, 256, 384),
        embed_dim=2048,
        fms_channels=1344,
        fms_grid=32,
        time_dim=256,
        heads=8,
    )


def desk_preset() -> SynthesizerConfig:
    return SynthesizerConfig(
        name="desk",
        resolution=64,
        base_channels=(24, 48, 64, 96),
        embed_dim=256,
        fms_channels=148,
        fms_grid=16,
        batch_size=8,
    )


def tiny_preset() -> SynthesizerConfig:
    return SynthesizerConfig(
        name="tiny",
        resolution=16,
        base_channels=(8, 12),
        embed_dim=16,
        fms_channels=14,
        fms_grid=4,
        time_dim=16,
        heads=2,
        batch_size=2,
        timesteps=50,
    )


PRESETS = {"paper": paper_preset, "desk": desk_preset, "tiny": tiny_preset}


def get_preset(name: str) -> SynthesizerConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise SynthConfigError(f"unknown synthesizer preset {name!r}") from None
