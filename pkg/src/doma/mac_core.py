"""SIC ordering, FTPA power allocation and the three downlink rate formulas.

The public operations take the single-realization domain types.  Each one is a
thin wrapper over a vectorised kernel (``*_batch``) that accepts arbitrary
leading batch axes; the Monte Carlo engine calls the kernels directly.

Array layout: devices on axis -2 and APs on axis -1 for gain/power matrices,
devices on axis -1 for per-device vectors.  Ranks are 1-based.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .scenario import ChannelRealization, PowerAllocation, SicOrder

_LN2 = np.log(2.0)


class Scheme(enum.Enum):
    SINGLE_AP_NOMA = "single_ap_noma"
    MASSIVE_INBAND_NOMA = "massive_inband_noma"
    DOMA = "doma"


class OrderingMetric(enum.Enum):
    """Aggregate used to collapse per-AP link quality into one SIC key."""

    SUM = "sum"


class DegenerateChannelError(ValueError):
    """A device has zero unified channel metric while FTPA needs ``metric**-alpha``."""

    def __init__(self, message: str, trial: int | None = None):
        self.trial = trial
        super().__init__(message if trial is None else f"trial {trial}: {message}")


@dataclass(frozen=True)
class RateSample:
    per_device_rate: np.ndarray
    scheme: Scheme

    def __post_init__(self) -> None:
        r = np.asarray(self.per_device_rate, dtype=float)
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("rates must be finite and nonnegative")
        r.setflags(write=False)
        object.__setattr__(self, "per_device_rate", r)


def _rate(bandwidth: float, sinr: np.ndarray) -> np.ndarray:
    # log1p keeps relative accuracy for tiny SINR.
    return bandwidth * np.log1p(sinr) / _LN2


# ---------------------------------------------------------------- kernels

def unified_metric_batch(gains: np.ndarray, noise_power: float,
                         metric: OrderingMetric = OrderingMetric.SUM) -> np.ndarray:
    if metric is OrderingMetric.SUM:
        return gains.sum(axis=-1) / noise_power
    raise NotImplementedError(metric)


def ranks_batch(metric: np.ndarray) -> np.ndarray:
    """1-based ranks by ascending metric; equal values rank by device index."""
    perm = np.argsort(metric, axis=-1, kind="stable")
    ranks = np.empty_like(perm)
    seq = np.broadcast_to(np.arange(1, metric.shape[-1] + 1), perm.shape)
    np.put_along_axis(ranks, perm, seq, axis=-1)
    return ranks


def ftpa_fractions_batch(metric: np.ndarray, alpha: float) -> np.ndarray:
    """Per-device power fractions ``metric**-alpha / sum(metric**-alpha)``."""
    if alpha == 0:
        return np.full(metric.shape, 1.0 / metric.shape[-1])
    if np.any(metric <= 0):
        raise DegenerateChannelError("device with zero unified channel metric")
    w = metric ** (-alpha)
    return w / w.sum(axis=-1, keepdims=True)


def weaker_tail_batch(powers: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    """For each device, the per-AP power still interfering after SIC.

    Element ``[..., m, k]`` is the sum of ``powers[..., j, k]`` over devices
    ``j`` ranked strictly above device ``m``.
    """
    perm = np.argsort(ranks, axis=-1, kind="stable")[..., None]
    by_rank = np.take_along_axis(powers, perm, axis=-2)
    rev = np.cumsum(by_rank[..., ::-1, :], axis=-2)
    tail_rev = np.zeros_like(rev)
    tail_rev[..., 1:, :] = rev[..., :-1, :]
    tail = tail_rev[..., ::-1, :]
    out = np.empty_like(tail)
    np.put_along_axis(out, perm, tail, axis=-2)
    return out


def massive_noma_rate_batch(powers, gains, ranks, noise_power, bandwidth):
    gamma = gains / noise_power
    signal = (powers * gamma).sum(axis=-1)
    interference = (weaker_tail_batch(powers, ranks) * gamma).sum(axis=-1)
    return _rate(bandwidth, signal / (interference + 1.0))


def doma_rate_batch(powers, gains, ranks, delta, ici_power, noise_power, bandwidth):
    signal = (powers * gains).sum(axis=-1)
    lam = (weaker_tail_batch(powers, ranks) * gains).sum(axis=-1)
    return _rate(bandwidth, signal / (lam + delta * ici_power + noise_power))


def single_ap_rate_batch(powers, gammas, ranks, bandwidth):
    interference = weaker_tail_batch(powers[..., None], ranks)[..., 0] * gammas
    return _rate(bandwidth, powers * gammas / (interference + 1.0))


# ---------------------------------------------------------------- operations

def unified_order(gains: ChannelRealization, noise_power: float,
                  metric: OrderingMetric = OrderingMetric.SUM) -> SicOrder:
    """Global SIC order from the noise-normalised sum of gains across APs."""
    if not noise_power > 0:
        raise ValueError("noise_power must be positive")
    mu = unified_metric_batch(gains.gains, noise_power, metric)
    return SicOrder(ranks_batch(mu), mu)


def ftpa_allocate(order: SicOrder, gains: ChannelRealization, budget_per_ap: float,
                  alpha: float) -> PowerAllocation:
    """Fractional transmit power allocation on the unified metric.

    Every AP splits its full budget with the same fractions, so each column
    sums to ``budget_per_ap``.  Raises :class:`DegenerateChannelError` when
    ``alpha > 0`` and some device has a zero metric.
    """
    if order.size != gains.cluster_size:
        raise ValueError("order and gains disagree on the cluster size")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    frac = ftpa_fractions_batch(order.metric_values, alpha)
    powers = np.repeat((budget_per_ap * frac)[:, None], gains.ap_count, axis=1)
    return PowerAllocation(powers)


def noma_rate_single_ap(powers, sinr_gammas, order: SicOrder, bandwidth: float) -> RateSample:
    """Rates of one AP serving an M-device cluster.

    ``sinr_gammas[m]`` is ``|h_m|^2 / (I_m + N_m)`` precomputed by the caller.
    """
    p = np.asarray(powers, dtype=float)
    g = np.asarray(sinr_gammas, dtype=float)
    rates = single_ap_rate_batch(p, g, order.rank_of_device, bandwidth)
    return RateSample(rates, Scheme.SINGLE_AP_NOMA)


def massive_noma_rate(powers: PowerAllocation, gains: ChannelRealization, order: SicOrder,
                      noise_power: float, bandwidth: float) -> RateSample:
    """Rates when K cooperating APs jointly serve one cluster with no ICI."""
    _check_dims(powers, gains, order)
    rates = massive_noma_rate_batch(powers.powers, gains.gains, order.rank_of_device,
                                    noise_power, bandwidth)
    return RateSample(rates, Scheme.MASSIVE_INBAND_NOMA)


def doma_rate(powers: PowerAllocation, gains: ChannelRealization, order: SicOrder,
              delta: float, ici_power: float, noise_power: float,
              bandwidth: float) -> RateSample:
    """Rates with sub-bands overlapping by ``delta`` and ICI power ``ici_power``."""
    _check_dims(powers, gains, order)
    rates = doma_rate_batch(powers.powers, gains.gains, order.rank_of_device,
                            delta, ici_power, noise_power, bandwidth)
    return RateSample(rates, Scheme.DOMA)


def _check_dims(powers: PowerAllocation, gains: ChannelRealization, order: SicOrder) -> None:
    if powers.powers.shape != gains.gains.shape or order.size != gains.cluster_size:
        raise ValueError(
            f"dimension mismatch: powers {powers.powers.shape}, gains {gains.gains.shape}, "
            f"order of {order.size} devices")
