"""Bandwidth-bound kernel model, lattice memory feasibility, chip placement
and operating-mode choice for a multi-GPU node.

Sizes use decimal units: 1 GB = 1e9 bytes, matching vendor figures.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DataError, DomainError, ParseError

GB = 1e9
GIB = 2**30
DEFAULT_MULTI_GPU_PENALTY = 0.2


@dataclass(frozen=True)
class GpuSpec:
    name: str
    chips_per_board: int
    memory_per_chip: float  # bytes
    bandwidth_per_chip: float  # bytes/s
    board_power: float  # W

    def __post_init__(self):
        for f in ("chips_per_board", "memory_per_chip", "bandwidth_per_chip", "board_power"):
            if not getattr(self, f) > 0:
                raise DataError(f"{self.name}: {f} must be positive")

    @classmethod
    def from_json(cls, obj: dict) -> "GpuSpec":
        try:
            return cls(
                name=str(obj["name"]),
                chips_per_board=int(obj.get("chips_per_board", 1)),
                memory_per_chip=float(obj["memory_per_chip_gb"]) * GB,
                bandwidth_per_chip=float(obj["bandwidth_per_chip_gb_s"]) * GB,
                board_power=float(obj["board_power_w"]),
            )
        except KeyError as exc:
            raise ParseError(f"GPU spec missing field {exc.args[0]!r}") from None


# board_power of the S10000 is the vendor TDP, not a measured L-CSC figure.
S9150 = GpuSpec("FirePro S9150", 1, 16 * GB, 320 * GB, 275.0)
S10000 = GpuSpec("FirePro S10000", 2, 6 * GB, 240 * GB, 375.0)
PRESETS = {"S9150": S9150, "S10000": S10000}


@dataclass(frozen=True)
class KernelModel:
    arithmetic_intensity: float  # flop/byte
    bandwidth_efficiency: float = 1.0

    def __post_init__(self):
        if not self.arithmetic_intensity > 0:
            raise DataError("arithmetic_intensity must be positive")
        if not 0 < self.bandwidth_efficiency <= 1:
            raise DataError("bandwidth_efficiency must be in (0, 1]")

    @classmethod
    def calibrated(cls, gflops: float, bandwidth: float, bandwidth_efficiency: float
                   ) -> "KernelModel":
        """Intensity that yields ``gflops`` on a chip of ``bandwidth`` bytes/s."""
        return cls(gflops * GB / (bandwidth_efficiency * bandwidth), bandwidth_efficiency)


#: Dslash operating point: 100 GFLOPS at 80% of 240 GB/s.
DSLASH = KernelModel.calibrated(100.0, 240 * GB, 0.8)


@dataclass(frozen=True)
class LatticeJob:
    nx: int
    ny: int
    nz: int
    nt: int
    bytes_per_site: float
    name: str = ""

    def __post_init__(self):
        for f in ("nx", "ny", "nz", "nt"):
            v = getattr(self, f)
            if not (isinstance(v, int) and v > 0):
                raise DataError(f"lattice extent {f} must be a positive integer, got {v!r}")
        if not self.bytes_per_site > 0:
            raise DataError("bytes_per_site must be positive")

    @classmethod
    def from_json(cls, obj: dict) -> "LatticeJob":
        if "bytes_per_site" not in obj:
            raise ParseError("lattice job needs an explicit bytes_per_site")
        try:
            return cls(int(obj["nx"]), int(obj["ny"]), int(obj["nz"]), int(obj["nt"]),
                       float(obj["bytes_per_site"]), str(obj.get("name", "")))
        except KeyError as exc:
            raise ParseError(f"lattice job missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class NodeConfig:
    gpu_boards: tuple[GpuSpec, ...]
    cpu: str = ""
    host_memory: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gpu_boards", tuple(self.gpu_boards))
        if not self.gpu_boards:
            raise DataError("node needs at least one GPU board")

    @property
    def chips(self) -> list[GpuSpec]:
        """One entry per GPU chip, in board order."""
        return [b for b in self.gpu_boards for _ in range(b.chips_per_board)]

    @property
    def gpu_memory(self) -> float:
        return sum(c.memory_per_chip for c in self.chips)

    @classmethod
    def from_json(cls, obj: dict) -> "NodeConfig":
        boards = []
        for b in obj.get("gpu_boards", []):
            if isinstance(b, str):
                try:
                    boards.append(PRESETS[b])
                except KeyError:
                    raise ParseError(f"unknown GPU preset {b!r}") from None
            else:
                boards.append(GpuSpec.from_json(b))
        return cls(tuple(boards), str(obj.get("cpu", "")),
                   float(obj.get("host_memory_gb", 0.0)) * GB)


@dataclass(frozen=True)
class OperatingMode:
    name: str
    performance: float  # GFLOPS
    power: float  # W

    def __post_init__(self):
        if not (self.performance > 0 and self.power > 0):
            raise DataError(f"mode {self.name}: performance and power must be positive")

    @property
    def gflops_per_w(self) -> float:
        return self.performance / self.power


def kernel_perf(gpu: GpuSpec, k: KernelModel) -> float:
    """GFLOPS per chip of a bandwidth-bound kernel."""
    return gpu.bandwidth_per_chip * k.bandwidth_efficiency * k.arithmetic_intensity / GB


def lattice_footprint(job: LatticeJob) -> float:
    return job.nx * job.ny * job.nz * job.nt * job.bytes_per_site


@dataclass(frozen=True)
class Placement:
    kind: str  # single_chip | spread | infeasible
    n_chips: int
    chip_indices: tuple[int, ...]
    gflops: float
    footprint: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "n_chips": self.n_chips,
                "chip_indices": list(self.chip_indices), "predicted_gflops": self.gflops,
                "footprint_bytes": self.footprint}


def _spread(chips: Sequence[GpuSpec], free: Sequence[int], footprint: float, k: KernelModel,
            penalty: float) -> tuple[tuple[int, ...], float] | None:
    # largest chips first so the fewest chips are used
    order = sorted(free, key=lambda i: (-chips[i].memory_per_chip, i))
    used, mem = [], 0.0
    for i in order:
        used.append(i)
        mem += chips[i].memory_per_chip
        if mem >= footprint:
            break
    else:
        return None
    perf = sum(kernel_perf(chips[i], k) for i in used)
    if len(used) > 1:
        perf *= 1.0 - penalty
    return tuple(sorted(used)), perf


def _check_penalty(penalty: float):
    if not 0 <= penalty < 1:
        raise DomainError(f"multi-GPU penalty must be in [0, 1), got {penalty}")


def place_job(job: LatticeJob, node: NodeConfig, k: KernelModel,
              multi_gpu_penalty: float = DEFAULT_MULTI_GPU_PENALTY) -> Placement:
    """Place one lattice on the fewest chips whose memory holds it.

    A single-chip fit uses the first chip (in board order) that is large
    enough. Spreading over several chips costs ``multi_gpu_penalty`` of the
    combined throughput, regardless of the chip count.
    """
    _check_penalty(multi_gpu_penalty)
    chips = node.chips
    fp = lattice_footprint(job)
    for i, c in enumerate(chips):
        if c.memory_per_chip >= fp:
            return Placement("single_chip", 1, (i,), kernel_perf(c, k), fp)
    got = _spread(chips, range(len(chips)), fp, k, multi_gpu_penalty)
    if got is None:
        return Placement("infeasible", 0, (), 0.0, fp)
    used, perf = got
    return Placement("spread", len(used), used, perf, fp)


@dataclass
class ThroughputReport:
    gflops: float
    assignments: list[dict] = field(default_factory=list)
    queued: list[int] = field(default_factory=list)
    infeasible: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"total_gflops": self.gflops, "assignments": self.assignments,
                "queued": self.queued, "infeasible": self.infeasible}


def node_throughput(node: NodeConfig, jobs: Sequence[LatticeJob], k: KernelModel,
                    multi_gpu_penalty: float = DEFAULT_MULTI_GPU_PENALTY) -> ThroughputReport:
    """Pack independent lattices onto the node's chips, first-fit decreasing.

    Each chip holds at most one job. Jobs too large for any free chip are
    spread across free chips when possible; jobs that cannot fit the whole
    node are ``infeasible``, the rest that find no room are ``queued``.
    Indices refer to positions in ``jobs``.
    """
    _check_penalty(multi_gpu_penalty)
    chips = node.chips
    free = set(range(len(chips)))
    order = sorted(range(len(jobs)), key=lambda j: (-lattice_footprint(jobs[j]), j))
    rep = ThroughputReport(0.0)
    total_mem = node.gpu_memory
    for j in order:
        fp = lattice_footprint(jobs[j])
        if fp > total_mem:
            rep.infeasible.append(j)
            continue
        single = next((i for i in sorted(free) if chips[i].memory_per_chip >= fp), None)
        if single is not None:
            used, perf = (single,), kernel_perf(chips[single], k)
        else:
            got = _spread(chips, free, fp, k, multi_gpu_penalty)
            if got is None:
                rep.queued.append(j)
                continue
            used, perf = got
        free.difference_update(used)
        rep.assignments.append({"job": j, "chips": list(used), "gflops": perf})
        rep.gflops += perf
    rep.assignments.sort(key=lambda a: a["job"])
    rep.queued.sort()
    rep.infeasible.sort()
    return rep


def mode_select(modes: Sequence[OperatingMode]) -> OperatingMode:
    """Mode with the best GFLOPS/W; equal ratios go to the faster mode.

    Ratios are compared exactly (as rationals) so ties are real ties.
    """
    if not modes:
        raise DomainError("no operating modes given")
    key = lambda m: (Fraction(m.performance) / Fraction(m.power), m.performance)
    best = modes[0]
    for m in modes[1:]:
        if key(m) > key(best):
            best = m
    return best


def load_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", exc.lineno) from None
