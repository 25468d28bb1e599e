"""Experiment configuration and the domain types shared across the simulator."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

SEED_LIMIT = 2**64


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``violations`` maps each offending field name to a human readable reason.
    """

    def __init__(self, violations: dict[str, str]):
        self.violations = dict(violations)
        detail = "; ".join(f"{k}: {v}" for k, v in self.violations.items())
        super().__init__(f"invalid configuration ({detail})")


@dataclass(frozen=True)
class ScenarioConfig:
    total_bandwidth_hz: float
    subband_bandwidth_hz: float
    overlap_fraction: float
    cluster_size: int
    ap_count: int
    per_ap_cluster_power_budget: float
    noise_power: float
    ici_power_fraction: float
    ftpa_decay: float
    epsilon: float
    trials: int
    seed: int

    @property
    def ici_power(self) -> float:
        """Absolute inter-cluster interference power (fraction times per-AP budget)."""
        return self.ici_power_fraction * self.per_ap_cluster_power_budget

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.per_ap_cluster_power_budget / self.noise_power)

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# A validated config is the same immutable object; the alias documents intent.
ValidatedConfig = ScenarioConfig

_INT_FIELDS = ("cluster_size", "ap_count", "trials", "seed")
FIELD_NAMES = tuple(f.name for f in dataclasses.fields(ScenarioConfig))


def min_trials(epsilon: float) -> int:
    """Smallest sample count that resolves the lower ``epsilon`` quantile."""
    return math.ceil(1 / Fraction(repr(float(epsilon))))


def _is_int(value: Any) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def _is_real(value: Any) -> bool:
    return _is_int(value) or (isinstance(value, (float, np.floating)) and math.isfinite(value))


def validate(config: ScenarioConfig) -> ValidatedConfig:
    """Check every invariant of ``config`` and return it unchanged.

    All violations are collected before raising, so a single
    :class:`ConfigError` names every bad field at once.
    """
    bad: dict[str, str] = {}
    for name in FIELD_NAMES:
        value = getattr(config, name)
        if name in _INT_FIELDS:
            if not _is_int(value):
                bad[name] = f"expected an integer, got {value!r}"
        elif not _is_real(value):
            bad[name] = f"expected a finite real number, got {value!r}"

    def check(name: str, ok: bool, reason: str) -> None:
        if name not in bad and not ok:
            bad[name] = reason

    c = config
    for name in ("total_bandwidth_hz", "subband_bandwidth_hz",
                 "per_ap_cluster_power_budget", "noise_power"):
        check(name, getattr(c, name) > 0, "must be strictly positive")
    check("cluster_size", c.cluster_size >= 1, "must be >= 1")
    check("ap_count", c.ap_count >= 1, "must be >= 1")
    check("trials", c.trials >= 1, "must be >= 1")
    check("overlap_fraction", 0 <= c.overlap_fraction < 1, "must lie in [0, 1)")
    check("ici_power_fraction", 0 <= c.ici_power_fraction <= 1, "must lie in [0, 1]")
    check("ftpa_decay", c.ftpa_decay >= 0, "must be nonnegative")
    check("epsilon", 0 < c.epsilon < 1, "must lie in (0, 1)")
    check("seed", 0 <= c.seed < SEED_LIMIT, "must be a 64-bit unsigned integer")
    if "subband_bandwidth_hz" not in bad and "total_bandwidth_hz" not in bad:
        check("subband_bandwidth_hz", c.subband_bandwidth_hz <= c.total_bandwidth_hz,
              "sub-band wider than the total band")
    if "epsilon" not in bad and "trials" not in bad:
        need = min_trials(c.epsilon)
        check("trials", c.trials >= need, f"at least {need} trials needed to resolve epsilon={c.epsilon}")
    if bad:
        raise ConfigError(bad)
    return config


def config_from_dict(data: dict[str, Any]) -> ValidatedConfig:
    if not isinstance(data, dict):
        raise ConfigError({"<document>": "top level must be a JSON object"})
    problems = {k: "unknown field" for k in data if k not in FIELD_NAMES}
    problems.update({k: "missing field" for k in FIELD_NAMES if k not in data})
    if problems:
        raise ConfigError(problems)
    return validate(ScenarioConfig(**data))


def config_to_json(config: ScenarioConfig) -> str:
    """Canonical JSON text (sorted keys) used for storage and digests."""
    return json.dumps(config.to_dict(), sort_keys=True, indent=2) + "\n"


def load_config(path: str | Path) -> ValidatedConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError({"<document>": f"not valid JSON: {exc}"}) from exc
    return config_from_dict(data)


@dataclass(frozen=True)
class ChannelRealization:
    """Power gains ``|h|^2`` as an M x K matrix (device rows, AP columns)."""

    gains: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 2:
            raise ValueError("gains must be a 2-D (devices x APs) matrix")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValueError("gains must be finite and nonnegative")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @property
    def cluster_size(self) -> int:
        return self.gains.shape[0]

    @property
    def ap_count(self) -> int:
        return self.gains.shape[1]


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers ``P[m, k]`` in watts, device rows and AP columns."""

    powers: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.powers, dtype=float)
        if p.ndim != 2 or np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("powers must be a finite nonnegative 2-D matrix")
        p.setflags(write=False)
        object.__setattr__(self, "powers", p)


@dataclass(frozen=True)
class SicOrder:
    """Global SIC ranking: rank 1 is the weakest device, rank M the strongest.

    ``rank_of_device[i]`` is the 1-based rank of device ``i`` (0-based position).
    """

    rank_of_device: np.ndarray
    metric_values: np.ndarray

    def __post_init__(self) -> None:
        ranks = np.asarray(self.rank_of_device, dtype=np.int64)
        metric = np.asarray(self.metric_values, dtype=float)
        if ranks.ndim != 1 or ranks.shape != metric.shape:
            raise ValueError("rank_of_device and metric_values must be equal-length vectors")
        if sorted(ranks.tolist()) != list(range(1, ranks.size + 1)):
            raise ValueError("rank_of_device must be a permutation of 1..M")
        ranks.setflags(write=False)
        metric.setflags(write=False)
        object.__setattr__(self, "rank_of_device", ranks)
        object.__setattr__(self, "metric_values", metric)

    @property
    def size(self) -> int:
        return self.rank_of_device.size

    def devices_by_rank(self) -> np.ndarray:
        """Device positions sorted from rank 1 to rank M."""
        return np.argsort(self.rank_of_device, kind="stable")
