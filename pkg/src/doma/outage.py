"""Monte Carlo estimation of per-device epsilon-outage capacity, plus sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from . import mac_core
from .channel import ChannelModel, draw_trials
from .mac_core import DegenerateChannelError, Scheme
from .scenario import ScenarioConfig, ValidatedConfig, min_trials, validate
from .spectrum import SpectrumLayout, layout

CSV_SCHEMA_VERSION = 1
CSV_HEADER = ("schema_version", "scheme", "K", "M", "delta", "epsilon", "snr_db",
              "device_rank", "capacity_bps_hz", "trials", "seed")

SWEEP_AXES = ("K", "M", "delta", "snr", "alpha")

# Chunk size is fixed so the arithmetic done per trial never depends on the
# number of workers.
CHUNK_TRIALS = 1024


class OutageResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class OutageReport:
    scheme: Scheme
    per_device_capacity: tuple[float, ...]  # index r-1 holds SIC rank r
    epsilon: float
    trials: int
    seed: int
    sweep_coordinates: dict[str, Any] = field(default_factory=dict)
    spectrum: SpectrumLayout | None = None

    def __post_init__(self) -> None:
        caps = np.asarray(self.per_device_capacity, dtype=float)
        if not np.all(np.isfinite(caps)) or np.any(caps < 0):
            raise ValueError("capacities must be finite and nonnegative")
        if self.trials < min_trials(self.epsilon):
            raise ValueError(f"{self.trials} trials cannot resolve epsilon={self.epsilon}")

    @property
    def cluster_min(self) -> float:
        return min(self.per_device_capacity)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scheme": self.scheme.value,
            "per_device_capacity": list(self.per_device_capacity),
            "cluster_min_capacity": self.cluster_min,
            "epsilon": self.epsilon,
            "trials": self.trials,
            "seed": self.seed,
            "sweep_coordinates": dict(self.sweep_coordinates),
            "spectrum": None if self.spectrum is None else self.spectrum.to_dict(),
        }

    def csv_rows(self) -> list[tuple]:
        c = self.sweep_coordinates
        return [(CSV_SCHEMA_VERSION, self.scheme.value, c["K"], c["M"], repr(float(c["delta"])),
                 repr(float(self.epsilon)), repr(float(c["snr_db"])), rank, repr(float(cap)),
                 self.trials, self.seed)
                for rank, cap in enumerate(self.per_device_capacity, start=1)]


def quantile_index(epsilon: float, n: int) -> int:
    # Exact rational arithmetic: epsilon * n must not round below an integer.
    return math.floor(Fraction(repr(float(epsilon))) * n)


def epsilon_outage_capacity(rate_samples, epsilon: float) -> np.ndarray:
    """Empirical lower ``epsilon`` quantile of each device's rate.

    ``rate_samples`` has one row per trial and one column per device (a 1-D
    input is a single device).  The result is the order statistic at index
    ``floor(epsilon * N)`` of the ascending samples, i.e. the largest rate
    such that at most a fraction ``epsilon`` of samples fall strictly below it.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    samples = np.asarray(rate_samples, dtype=float)
    squeeze = samples.ndim == 1
    if squeeze:
        samples = samples[:, None]
    n = samples.shape[0]
    need = min_trials(epsilon)
    if n < need:
        raise OutageResolutionError(
            f"epsilon={epsilon} needs at least {need} samples, got {n}")
    caps = np.sort(samples, axis=0)[quantile_index(epsilon, n)]
    return caps[0] if squeeze else caps


def _sweep_coordinates(config: ScenarioConfig) -> dict[str, Any]:
    return {"K": config.ap_count, "M": config.cluster_size, "delta": config.overlap_fraction,
            "snr_db": config.snr_db, "alpha": config.ftpa_decay}


def simulate_chunk(config: ScenarioConfig, scheme: Scheme, model: ChannelModel,
                   start: int, stop: int) -> np.ndarray:
    """Spectral efficiency of every SIC rank for trials ``start..stop-1``.

    Returns a ``(stop - start, M)`` array whose column ``r-1`` is the rate of
    the rank-``r`` device in each trial.
    """
    c = config
    gains = draw_trials(model, c.cluster_size, c.ap_count, c.seed, start, stop)
    if scheme is Scheme.SINGLE_AP_NOMA:
        gains = gains[..., :1]
    metric = mac_core.unified_metric_batch(gains, c.noise_power)
    try:
        frac = mac_core.ftpa_fractions_batch(metric, c.ftpa_decay)
    except DegenerateChannelError:
        bad = int(np.flatnonzero(np.any(metric <= 0, axis=-1))[0])
        raise DegenerateChannelError("device with zero unified channel metric",
                                     trial=start + bad) from None
    ranks = mac_core.ranks_batch(metric)
    powers = np.broadcast_to((c.per_ap_cluster_power_budget * frac)[..., None], gains.shape)
    if scheme is Scheme.SINGLE_AP_NOMA:
        # Orthogonal sub-bands: I_m = 0, so gamma = |h|^2 / N.
        rates = mac_core.single_ap_rate_batch(powers[..., 0], gains[..., 0] / c.noise_power,
                                              ranks, 1.0)
    elif scheme is Scheme.MASSIVE_INBAND_NOMA:
        rates = mac_core.massive_noma_rate_batch(powers, gains, ranks, c.noise_power, 1.0)
    elif scheme is Scheme.DOMA:
        rates = mac_core.doma_rate_batch(powers, gains, ranks, c.overlap_fraction,
                                         c.ici_power, c.noise_power, 1.0)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return np.take_along_axis(rates, np.argsort(ranks, axis=-1, kind="stable"), axis=-1)


def _chunk_job(args):
    return simulate_chunk(*args)


def simulate_rates(config: ValidatedConfig, scheme: Scheme, *, workers: int = 1,
                   model: ChannelModel | None = None) -> np.ndarray:
    """All trials' per-rank rates, ``(trials, M)``; identical for any ``workers``."""
    model = model or ChannelModel()
    bounds = [(s, min(s + CHUNK_TRIALS, config.trials))
              for s in range(0, config.trials, CHUNK_TRIALS)]
    jobs = [(config, scheme, model, s, e) for s, e in bounds]
    if workers <= 1 or len(jobs) == 1:
        parts = [_chunk_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_job, jobs))
    return np.concatenate(parts, axis=0)


def run_scenario(config: ValidatedConfig, scheme: Scheme, *, workers: int = 1,
                 model: ChannelModel | None = None) -> OutageReport:
    """Monte Carlo epsilon-outage capacity of every SIC rank under ``scheme``."""
    config = validate(config)
    rates = simulate_rates(config, scheme, workers=workers, model=model)
    caps = epsilon_outage_capacity(rates, config.epsilon)
    spectrum = layout(config.total_bandwidth_hz, config.subband_bandwidth_hz,
                      config.overlap_fraction)
    return OutageReport(
        scheme=scheme,
        per_device_capacity=tuple(float(x) for x in caps),
        epsilon=config.epsilon,
        trials=config.trials,
        seed=config.seed,
        sweep_coordinates=_sweep_coordinates(config),
        spectrum=spectrum,
    )


def apply_axis(config: ScenarioConfig, axis: str, value) -> ValidatedConfig:
    """Copy of ``config`` with one sweep axis set to ``value``."""
    if axis == "K":
        changed = config.replace(ap_count=_as_int(axis, value))
    elif axis == "M":
        changed = config.replace(cluster_size=_as_int(axis, value))
    elif axis == "delta":
        changed = config.replace(overlap_fraction=float(value))
    elif axis == "snr":
        budget = config.noise_power * 10.0 ** (float(value) / 10.0)
        changed = config.replace(per_ap_cluster_power_budget=budget)
    elif axis == "alpha":
        changed = config.replace(ftpa_decay=float(value))
    else:
        raise ValueError(f"invalid sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    return validate(changed)


def _as_int(axis: str, value) -> int:
    as_float = float(value)
    if not as_float.is_integer():
        raise ValueError(f"axis {axis} takes integers, got {value!r}")
    return int(as_float)


def sweep(config: ValidatedConfig, axis: str, values: Sequence, scheme: Scheme, *,
          workers: int = 1, model: ChannelModel | None = None) -> list[OutageReport]:
    """One report per axis value.

    Every point reuses the master seed, so trial ``t`` sees the same fading
    draw at every point that shares the matrix shape.  Adding points never
    changes points already computed.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"invalid sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")
    configs = [apply_axis(config, axis, v) for v in values]
    return [run_scenario(c, scheme, workers=workers, model=model) for c in configs]


# ---------------------------------------------------------------- output

def reports_to_csv(reports: Iterable[OutageReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for report in reports:
        writer.writerows(report.csv_rows())
    return buf.getvalue()


def reports_to_json(reports: Iterable[OutageReport]) -> str:
    doc = {"schema_version": CSV_SCHEMA_VERSION, "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- presets

def fig3_preset(**overrides) -> ValidatedConfig:
    """Massive in-band NOMA baseline: M = 8 devices, one AP, 10 dB per-AP SNR.

    Uniform power (``ftpa_decay=0``) keeps every rank's capacity monotone in
    the number of cooperating APs; see the README for why.
    """
    base = ScenarioConfig(
        total_bandwidth_hz=1.0, subband_bandwidth_hz=1.0, overlap_fraction=0.0,
        cluster_size=8, ap_count=1, per_ap_cluster_power_budget=10.0, noise_power=1.0,
        ici_power_fraction=0.1, ftpa_decay=0.0, epsilon=0.1, trials=10_000, seed=2020,
    )
    return validate(base.replace(**overrides))


def fig5_preset(**overrides) -> ValidatedConfig:
    """D-OMA comparison setup: ICI at 10% of the per-AP budget and unit noise."""
    base = ScenarioConfig(
        total_bandwidth_hz=8.0, subband_bandwidth_hz=1.0, overlap_fraction=0.0,
        cluster_size=8, ap_count=4, per_ap_cluster_power_budget=10.0, noise_power=1.0,
        ici_power_fraction=0.1, ftpa_decay=1.0, epsilon=0.1, trials=10_000, seed=2020,
    )
    return validate(base.replace(**overrides))
