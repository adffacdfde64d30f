"""Analyzer configuration and the shipped presets.

The "paper" preset mirrors the published operating point (512 input,
mid-scale feature block of 1344 channels resized to 32x32); the "desk"
preset is the CPU-trainable scale every test and acceptance run uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict


class ConfigError(ValueError):
    pass


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class AnalyzerConfig:
    name: str
    input_resolution: int
    # Encoder output sizes, descending; decoder mirrors them in reverse.
    pyramid_sizes: tuple[int, ...]
    pyramid_channels: tuple[int, ...]
    style_dim_s: int = 64
    style_dim_w: int = 64
    noise_dim: int = 64
    mapping_depth: int = 4
    detector_input_sizes: tuple[int, ...] = ()
    detector_output_size: int = 64
    detector_channels: int = 64
    fms_source_sizes: tuple[int, ...] = ()
    fms_grid: int = 16
    disc_channels: tuple[int, ...] = (32, 64, 64, 64)
    lambda_l1: float = 1.0
    lambda_perc: float = 1.0
    lambda_adv: float = 0.05
    lambda_dice: float = 1.0
    r1_gamma: float = 10.0
    r1_interval: int = 16
    lr: float = 1e-3
    batch_size: int = 16
    epochs: int = 100

    def __post_init__(self):
        if len(self.pyramid_sizes) != len(self.pyramid_channels):
            raise ConfigError("pyramid_sizes and pyramid_channels length mismatch")
        sizes = list(self.pyramid_sizes)
        if sizes != sorted(sizes, reverse=True):
            raise ConfigError("pyramid_sizes must be strictly descending")
        for s in sizes + [self.input_resolution, self.detector_output_size, self.fms_grid]:
            if not _is_pow2(int(s)):
                raise ConfigError(f"sizes must be powers of two, got {s}")
        for i in range(len(sizes) - 1):
            if sizes[i] != 2 * sizes[i + 1]:
                raise ConfigError("pyramid sizes must halve at each level")
        if sizes[0] * 2 != self.input_resolution:
            raise ConfigError("first pyramid size must be input_resolution/2")
        size_set = set(sizes)
        if not set(self.detector_input_sizes) <= size_set:
            raise ConfigError("detector_input_sizes must be pyramid sizes")
        if not set(self.fms_source_sizes) <= size_set:
            raise ConfigError("fms_source_sizes must be pyramid sizes")

    @property
    def levels(self) -> int:
        return len(self.pyramid_sizes)

    def channels_at(self, size: int) -> int:
        return self.pyramid_channels[self.pyramid_sizes.index(size)]

    @property
    def fms_channels(self) -> int:
        """Channel count of the concatenated mid-scale feature block."""
        return sum(self.channels_at(s) for s in self.fms_source_sizes)

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "AnalyzerConfig":
        d = dict(d)
        for key in (
            "pyramid_sizes",
            "pyramid_channels",
            "detector_input_sizes",
            "fms_source_sizes",
            "disc_channels",
        ):
            d[key] = tuple(d[key])
        return cls(**d)


def paper_preset() -> AnalyzerConfig:
    # Mid-scale block: 512@16 + 512@32 + 256@64 + 64@128 = 1344 channels.
    return AnalyzerConfig(
        name="paper",
        input_resolution=512,
        pyramid_sizes=(256, 128, 64, 32, 16, 8),
        pyramid_channels=(64, 64, 256, 512, 512, 512),
        style_dim_s=512,
        style_dim_w=512,
        noise_dim=512,
        mapping_depth=8,
        detector_input_sizes=(8, 16, 32, 64),
        detector_output_size=256,
        detector_channels=256,
        fms_source_sizes=(16, 32, 64, 128),
        fms_grid=32,
        disc_channels=(64, 128, 256, 512, 512, 512),
    )


def desk_preset() -> AnalyzerConfig:
    # Mid-scale block: 64@8 + 48@16 + 24@32 + 12@64 = 148 channels.
    return AnalyzerConfig(
        name="desk",
        input_resolution=128,
        pyramid_sizes=(64, 32, 16, 8, 4),
        pyramid_channels=(12, 24, 48, 64, 64),
        style_dim_s=64,
        style_dim_w=64,
        noise_dim=64,
        mapping_depth=4,
        detector_input_sizes=(4, 8, 16, 32),
        detector_output_size=64,
        detector_channels=32,
        fms_source_sizes=(8, 16, 32, 64),
        fms_grid=16,
        disc_channels=(16, 32, 48, 64),
        batch_size=8,
    )


def tiny_preset() -> AnalyzerConfig:
    """Minimal configuration for gradient checks and shape tests."""
    return AnalyzerConfig(
        name="tiny",
        input_resolution=16,
        pyramid_sizes=(8, 4),
        pyramid_channels=(6, 8),
        style_dim_s=8,
        style_dim_w=8,
        noise_dim=8,
        mapping_depth=2,
        detector_input_sizes=(4, 8),
        detector_output_size=8,
        detector_channels=8,
        fms_source_sizes=(4, 8),
        fms_grid=4,
        disc_channels=(8, 8),
        batch_size=2,
    )


PRESETS = {
    "paper": paper_preset,
    "desk": desk_preset,
    "tiny": tiny_preset,
}


def get_preset(name: str) -> AnalyzerConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown analyzer preset {name!r}") from None
