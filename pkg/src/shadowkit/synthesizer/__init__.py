"""Shadow synthesizer: reference-conditioned denoising diffusion."""

from .config import SynthConfigError, SynthesizerConfig, desk_preset, get_preset, paper_preset, tiny_preset
from .model import (
    EMBEDDING_MODES,
    Adaptor,
    ConstantEmbedding,
    DenoiserUNet,
    embedding_source_baseline,
    timestep_embedding,
)
from .sampling import SynthCondition, denoise_step, sample_few_step
from .schedule import (
    DiffusionSchedule,
    ScheduleError,
    few_step_timesteps,
    from_signal,
    q_sample,
    q_sample_signal,
    to_signal,
)
from .train import (
    SynthExample,
    SynthTrainError,
    SynthTrainOptions,
    SynthTrainResult,
    build_examples_from_pairs,
    build_examples_from_scenes,
    load_synthesizer,
    reference_features,
    synth_loss,
    train_synthesizer,
    unet_lr_for_epoch,
    weights_fingerprint,
)

__all__ = [
    "SynthConfigError",
    "SynthesizerConfig",
    "desk_preset",
    "get_preset",
    "paper_preset",
    "tiny_preset",
    "EMBEDDING_MODES",
    "Adaptor",
    "ConstantEmbedding",
    "DenoiserUNet",
    "embedding_source_baseline",
    "timestep_embedding",
    "SynthCondition",
    "denoise_step",
    "sample_few_step",
    "DiffusionSchedule",
    "ScheduleError",
    "few_step_timesteps",
    "from_signal",
    "q_sample",
    "q_sample_signal",
    "to_signal",
    "SynthExample",
    "SynthTrainError",
    "SynthTrainOptions",
    "SynthTrainResult",
    "build_examples_from_pairs",
    "build_examples_from_scenes",
    "load_synthesizer",
    "reference_features",
    "synth_loss",
    "train_synthesizer",
    "unet_lr_for_epoch",
    "weights_fingerprint",
]
