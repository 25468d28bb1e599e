"""Seeded fading generator for the per-device, per-AP power gain matrix."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .scenario import ChannelRealization


class FadingLaw(enum.Enum):
    # Rayleigh amplitude, i.e. exponentially distributed power gain.
    RAYLEIGH_POWER = "rayleigh_power"


@dataclass(frozen=True)
class ChannelModel:
    mean_gain: float = 1.0
    distribution: FadingLaw = FadingLaw.RAYLEIGH_POWER

    def __post_init__(self) -> None:
        if not self.mean_gain > 0:
            raise ValueError(f"mean_gain must be positive, got {self.mean_gain!r}")


def trial_stream(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial.

    Each trial gets its own child of the master seed sequence, so the draw for
    a given trial does not depend on how many trials ran before it or on which
    worker produced it.
    """
    if trial < 0:
        raise ValueError("trial index must be nonnegative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    return np.random.Generator(np.random.PCG64(ss))


def _sample(model: ChannelModel, m: int, k: int, stream: np.random.Generator) -> np.ndarray:
    if m < 1 or k < 1:
        raise ValueError(f"need m, k >= 1, got m={m}, k={k}")
    if model.distribution is FadingLaw.RAYLEIGH_POWER:
        # Drawn AP-major so that the first k' columns are the same for any k >= k'.
        return stream.exponential(model.mean_gain, size=(k, m)).T.copy()
    raise NotImplementedError(model.distribution)


def draw(model: ChannelModel, m: int, k: int, stream: np.random.Generator) -> ChannelRealization:
    """Draw one ``m x k`` realization of i.i.d. power gains from ``stream``."""
    return ChannelRealization(_sample(model, m, k, stream))


def draw_trials(model: ChannelModel, m: int, k: int, seed: int, start: int, stop: int) -> np.ndarray:
    """Gains for trials ``start..stop-1`` stacked into a ``(trials, m, k)`` array."""
    out = np.empty((stop - start, m, k))
    for i, trial in enumerate(range(start, stop)):
        out[i] = _sample(model, m, k, trial_stream(seed, trial))
    return out
