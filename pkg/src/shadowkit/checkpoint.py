"""Versioned checkpoint archive shared by the analyzer and synthesizer.

A checkpoint is a single torch.save archive holding named weight arrays,
the config as a JSON-able dict, optimizer state, RNG states, and the step
counter, so training resumes bit-exactly. See docs/SCHEMAS.md.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import torch

CHECKPOINT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


def rng_states(
    data_rng: np.random.Generator | None = None,
    torch_gens: dict[str, torch.Generator] | None = None,
) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if data_rng is not None:
        out["numpy"] = data_rng.bit_generator.state
    if torch_gens:
        out["torch"] = {name: g.get_state() for name, g in torch_gens.items()}
    return out


def restore_rng(
    states: dict[str, Any],
    data_rng: np.random.Generator | None = None,
    torch_gens: dict[str, torch.Generator] | None = None,
):
    if data_rng is not None and "numpy" in states:
        data_rng.bit_generator.state = states["numpy"]
    if torch_gens and "torch" in states:
        for name, g in torch_gens.items():
            if name in states["torch"]:
                g.set_state(states["torch"][name])


def save_checkpoint(
    path: str | Path,
    kind: str,
    config: dict,
    models: dict[str, dict],
    optimizers: dict[str, dict] | None = None,
    rng: dict[str, Any] | None = None,
    step: int = 0,
    extra: dict | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": config,
        "models": models,
        "optimizers": optimizers or {},
        "rng": rng or {},
        "step": step,
        "extra": extra or {},
    }
    torch.save(payload, path)
    return path


def load_checkpoint(path: str | Path, expected_kind: str | None = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )
    if expected_kind is not None and payload.get("kind") != expected_kind:
        raise CheckpointError(
            f"checkpoint kind {payload.get('kind')!r} does not match "
            f"expected {expected_kind!r}"
        )
    return payload
