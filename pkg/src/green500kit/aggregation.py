"""Node-variability statistics, representative-node choice and
subset-to-system power extrapolation."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DataError, DomainError, ParseError


@dataclass(frozen=True)
class NodeEfficiencySample:
    node_id: str
    efficiency: float  # MFLOPS/W

    def __post_init__(self):
        if not (self.efficiency > 0 and math.isfinite(self.efficiency)):
            raise DataError(f"node {self.node_id}: efficiency must be positive, got {self.efficiency}")


@dataclass(frozen=True)
class VariabilityStats:
    mean: float
    stddev: float  # population
    rel_stddev: float
    min: float
    max: float
    n: int
    sample_stddev: float  # Bessel-corrected; 0 when n == 1

    @property
    def half_range(self) -> float:
        """Half the min-max spread relative to the mean."""
        return (self.max - self.min) / 2 / self.mean

    def to_json(self) -> dict:
        return {
            "mean_mflops_per_w": self.mean,
            "stddev_mflops_per_w": self.stddev,
            "rel_stddev": self.rel_stddev,
            "sample_stddev_mflops_per_w": self.sample_stddev,
            "min_mflops_per_w": self.min,
            "max_mflops_per_w": self.max,
            "n": self.n,
        }


def _as_samples(samples) -> list[NodeEfficiencySample]:
    out = []
    for i, s in enumerate(samples):
        if isinstance(s, NodeEfficiencySample):
            out.append(s)
        elif isinstance(s, (tuple, list)):
            out.append(NodeEfficiencySample(str(s[0]), float(s[1])))
        else:
            out.append(NodeEfficiencySample(f"node{i}", float(s)))
    return out


def variability(samples: Iterable[NodeEfficiencySample | float]) -> VariabilityStats:
    """Mean and population standard deviation of per-node efficiencies.

    Bare numbers are accepted and given ids ``node0``, ``node1``, ...
    """
    samples = _as_samples(samples)
    if not samples:
        raise DomainError("variability needs at least one sample")
    xs = sorted(s.efficiency for s in samples)  # order-independent summation
    n = len(xs)
    mean = math.fsum(xs) / n
    ss = math.fsum((x - mean) ** 2 for x in xs)
    std = math.sqrt(ss / n)
    return VariabilityStats(
        mean=mean,
        stddev=std,
        rel_stddev=std / mean,
        min=xs[0],
        max=xs[-1],
        n=n,
        sample_stddev=math.sqrt(ss / (n - 1)) if n > 1 else 0.0,
    )


def median_efficiency(samples: Sequence[NodeEfficiencySample]) -> float:
    """Median; the lower-middle element when ``n`` is even."""
    xs = sorted(s.efficiency for s in samples)
    return xs[(len(xs) - 1) // 2]


def select_representative_nodes(samples: Iterable[NodeEfficiencySample | float], k: int) -> list[str]:
    """Ids of the ``k`` nodes closest to the median efficiency.

    Ordered by distance to the median, ties broken by the smaller node id.
    """
    samples = _as_samples(samples)
    if not 1 <= k <= len(samples):
        raise DomainError(f"k must be in [1, {len(samples)}], got {k}")
    med = median_efficiency(samples)
    ranked = sorted(samples, key=lambda s: (abs(s.efficiency - med), s.node_id))
    return [s.node_id for s in ranked[:k]]


def extrapolate_power(measured_avg_power: float, nodes_measured: int, nodes_total: int,
                      network_power: float = 0.0) -> float:
    """Scale metered node power to the whole system and add network power."""
    if nodes_measured < 1:
        raise DomainError("at least one node must be measured")
    if nodes_total < nodes_measured:
        raise DomainError(f"nodes_total {nodes_total} < nodes_measured {nodes_measured}")
    if measured_avg_power < 0 or network_power < 0:
        raise DomainError("power inputs must be non-negative")
    if nodes_measured == nodes_total:
        return measured_avg_power + network_power
    return measured_avg_power / nodes_measured * nodes_total + network_power


def extrapolation_uncertainty(stats: VariabilityStats) -> float:
    # Deliberately not divided by sqrt(n): nodes are not independent draws.
    return stats.rel_stddev


def parse_node_samples(text: str) -> list[NodeEfficiencySample]:
    """Parse ``node_id,efficiency_mflops_per_w`` CSV (header optional, ``#`` comments)."""
    out = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader(io.StringIO(line)))]
        if not out and cells == ["node_id", "efficiency_mflops_per_w"]:
            continue
        if len(cells) != 2:
            raise ParseError(f"expected 2 fields, got {len(cells)}", lineno)
        try:
            value = float(cells[1])
        except ValueError:
            raise ParseError(f"efficiency {cells[1]!r} is not a number", lineno) from None
        if cells[0] in seen:
            raise DataError(f"line {lineno}: duplicate node id {cells[0]!r}")
        seen.add(cells[0])
        try:
            out.append(NodeEfficiencySample(cells[0], value))
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    return out


def load_node_samples(path) -> list[NodeEfficiencySample]:
    with open(path) as fh:
        return parse_node_samples(fh.read())
