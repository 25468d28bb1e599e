"""Layout of delta-overlapped NOMA sub-bands over a fixed total band."""

from __future__ import annotations

import math
from dataclasses import dataclass

# Guards floor() against (B - W) / spacing landing a hair below an integer.
_PACK_TOL = 1e-9


class SpectrumFitError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumLayout:
    subbands: tuple[tuple[float, float], ...]  # (center_hz, width_hz)
    overlap_fraction: float
    total_bandwidth_hz: float

    @property
    def count(self) -> int:
        return len(self.subbands)

    @property
    def spacing_hz(self) -> float:
        width = self.subbands[0][1]
        return width * (1.0 - self.overlap_fraction)

    def edges(self) -> list[tuple[float, float]]:
        return [(c - w / 2, c + w / 2) for c, w in self.subbands]

    def to_dict(self) -> dict:
        return {
            "total_bandwidth_hz": self.total_bandwidth_hz,
            "overlap_fraction": self.overlap_fraction,
            "count": self.count,
            "subbands": [{"center_hz": c, "width_hz": w} for c, w in self.subbands],
        }


def cluster_count(total_bandwidth: float, subband_width: float, delta: float) -> int:
    spacing = subband_width * (1.0 - delta)
    return math.floor((total_bandwidth - subband_width) / spacing + _PACK_TOL) + 1


def layout(total_bandwidth: float, subband_width: float, delta: float) -> SpectrumLayout:
    """Pack as many width-``W`` sub-bands into ``[0, B]`` as the overlap allows.

    Adjacent sub-bands overlap by ``delta * W``; the first starts at 0.
    """
    if not (total_bandwidth > 0 and subband_width > 0):
        raise ValueError("bandwidths must be positive")
    if not 0 <= delta < 1:
        raise ValueError(f"delta must lie in [0, 1), got {delta!r}")
    if subband_width > total_bandwidth:
        raise SpectrumFitError(
            f"sub-band of {subband_width} Hz does not fit in {total_bandwidth} Hz")
    n = cluster_count(total_bandwidth, subband_width, delta)
    spacing = subband_width * (1.0 - delta)
    bands = tuple((i * spacing + subband_width / 2, subband_width) for i in range(n))
    return SpectrumLayout(bands, delta, total_bandwidth)


def capacity_gain(layout_doma: SpectrumLayout, layout_noma: SpectrumLayout,
                  cluster_size_doma: int, cluster_size_noma: int) -> float:
    """Ratio of devices served simultaneously by the two layouts."""
    if layout_doma.total_bandwidth_hz != layout_noma.total_bandwidth_hz:
        raise ValueError("layouts must cover the same total band")
    return (layout_doma.count * cluster_size_doma) / (layout_noma.count * cluster_size_noma)


def assign_round_robin(device_count: int, spectrum: SpectrumLayout) -> list[list[int]]:
    """Device indices per sub-band, dealt out in index order."""
    clusters: list[list[int]] = [[] for _ in range(spectrum.count)]
    for d in range(device_count):
        clusters[d % spectrum.count].append(d)
    return clusters
