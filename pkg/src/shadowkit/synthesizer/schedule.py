"""Forward-noising schedule shared by training and the few-step sampler."""

from __future__ import annotations

from dataclasses import dataclass

import torch


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class DiffusionSchedule:
    """Linear-beta noising process; all arrays float64, indexed t=0..T-1."""

    betas: torch.Tensor

    def __post_init__(self):
        b = self.betas
        if b.dim() != 1 or len(b) < 1:
            raise ScheduleError("betas must be a 1-D sequence")
        if not bool(((b > 0) & (b < 1)).all()):
            raise ScheduleError("betas must lie strictly in (0, 1)")
        if len(b) > 1 and not bool((b[1:] > b[:-1]).all()):
            raise ScheduleError("betas must be strictly increasing")

    @classmethod
    def linear(
        cls, timesteps: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02
    ) -> "DiffusionSchedule":
        return cls(torch.linspace(beta_start, beta_end, timesteps, dtype=torch.float64))

    @property
    def timesteps(self) -> int:
        return len(self.betas)

    @property
    def alphas(self) -> torch.Tensor:
        return 1.0 - self.betas

    @property
    def alpha_bar(self) -> torch.Tensor:
        return torch.cumprod(self.alphas, dim=0)


def to_signal(x01: torch.Tensor) -> torch.Tensor:
    """Affine map [0,1] -> [-1,1]."""
    return 2.0 * x01 - 1.0


def from_signal(x: torch.Tensor) -> torch.Tensor:
    return torch.clamp((x + 1.0) / 2.0, 0.0, 1.0)


def _gather_ab(schedule: DiffusionSchedule, t, like: torch.Tensor) -> torch.Tensor:
    ab = schedule.alpha_bar.to(like.dtype)
    if isinstance(t, int):
        return ab[t]
    t = torch.as_tensor(t, dtype=torch.long)
    view = [len(t)] + [1] * (like.dim() - 1)
    return ab[t].reshape(view)


def q_sample_signal(
    x0_signal: torch.Tensor, t, eps: torch.Tensor, schedule: DiffusionSchedule
) -> torch.Tensor:
    """Noising in the [-1,1] signal domain: sqrt(ab_t)*x0 + sqrt(1-ab_t)*eps.

    Linear in (x0_signal, eps).
    """
    ab = _gather_ab(schedule, t, x0_signal)
    return torch.sqrt(ab) * x0_signal + torch.sqrt(1.0 - ab) * eps


def q_sample(
    x0: torch.Tensor, t, eps: torch.Tensor, schedule: DiffusionSchedule
) -> torch.Tensor:
    """Noising of an image in [0,1]: maps to [-1,1] first."""
    return q_sample_signal(to_signal(x0), t, eps, schedule)


def few_step_timesteps(timesteps: int, steps: int) -> list[int]:
    """Descending sample times: T-1 then uniform fractions of T.

    steps=4, T=1000 -> [999, 750, 500, 250]; steps=1 -> [999].
    """
    if steps < 1:
        raise ScheduleError("steps must be >= 1")
    ts = [timesteps - 1]
    for i in range(1, steps):
        ts.append(timesteps * (steps - i) // steps)
    return ts
