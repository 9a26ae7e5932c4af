"""Component-level node power model and a synthetic HPL power profile.

Only two figures here come from the L-CSC measurements: 275 W per GPU
board and up to 20 W for USB. Every other default is a placeholder that a
configuration document is expected to override.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError, DomainError, ParseError
from .telemetry import PowerTrace

GPU_BOARD_W = 275.0
USB_MAX_W = 20.0


@dataclass(frozen=True)
class FanCurve:
    """Fan watts as a piecewise-linear function of load, clamped at the ends."""

    points: tuple[tuple[float, float], ...] = ((0.0, 0.0),)

    def __post_init__(self):
        pts = tuple((float(a), float(b)) for a, b in self.points)
        if not pts:
            raise DataError("fan curve needs at least one point")
        loads = [a for a, _ in pts]
        watts = [b for _, b in pts]
        if any(not 0.0 <= a <= 1.0 for a in loads):
            raise DataError("fan curve loads must lie in [0, 1]")
        if any(b < 0 for b in watts):
            raise DataError("fan curve power must be non-negative")
        if any(b <= a for a, b in zip(loads, loads[1:])):
            raise DataError("fan curve loads must be strictly increasing")
        if any(b < a for a, b in zip(watts, watts[1:])):
            raise DataError("fan curve power must be non-decreasing in load")
        object.__setattr__(self, "points", pts)

    def __call__(self, load: float) -> float:
        loads = [a for a, _ in self.points]
        watts = [b for _, b in self.points]
        return float(np.interp(load, loads, watts))


@dataclass(frozen=True)
class SavingsToggles:
    usb_suspend: bool = False
    disk_off: bool = False
    ethernet_off: bool = False


@dataclass(frozen=True)
class ComponentPower:
    cpu_w_each: float = 0.0
    cpu_count: int = 0
    gpu_w_each: float = GPU_BOARD_W
    gpu_count: int = 0
    memory_w: float = 0.0
    chipset_w: float = 0.0
    network_w: float = 0.0
    management_w: float = 0.0
    usb_w: float = 0.0
    disk_w: float = 0.0
    ethernet_w: float = 0.0
    fan: FanCurve = field(default_factory=FanCurve)

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name != "fan" and value < 0:
                raise DataError(f"{name} must be non-negative, got {value}")

    @classmethod
    def from_json(cls, obj: dict) -> "ComponentPower":
        if not isinstance(obj, dict):
            raise ParseError("component power config must be a JSON object")
        obj = dict(obj)
        fan = obj.pop("fan", None)
        obj.pop("comment", None)
        try:
            model = cls(**obj)
        except TypeError as exc:
            raise ParseError(f"bad component power config: {exc}") from None
        if fan is not None:
            pts = fan["points"] if isinstance(fan, dict) else fan
            model = cls(**{**obj, "fan": FanCurve(tuple(map(tuple, pts)))})
        return model


def node_power(model: ComponentPower, load: float,
               toggles: SavingsToggles = SavingsToggles()) -> float:
    """Node watts at ``load`` in [0, 1] with the given savings applied."""
    if not 0.0 <= load <= 1.0:
        raise DomainError(f"load must be in [0, 1], got {load}")
    total = (model.cpu_w_each * model.cpu_count + model.gpu_w_each * model.gpu_count
             + model.memory_w + model.chipset_w + model.network_w + model.management_w)
    if not toggles.usb_suspend:
        total += model.usb_w
    if not toggles.disk_off:
        total += model.disk_w
    if not toggles.ethernet_off:
        total += model.ethernet_w
    return total + model.fan(load)


@dataclass(frozen=True)
class HplTraceParams:
    duration: float
    plateau_w: float
    tail_start: float = 1.0
    tail_end_w: float | None = None
    ramp_duration: float = 0.0
    noise_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.tail_end_w is None:
            object.__setattr__(self, "tail_end_w", self.plateau_w)
        if not self.duration > 0:
            raise DomainError("duration must be positive")
        if not 0.0 <= self.tail_start <= 1.0:
            raise DomainError("tail_start must be in [0, 1]")
        if self.plateau_w < 0 or self.tail_end_w < 0:
            raise DomainError("power levels must be non-negative")
        if self.tail_end_w > self.plateau_w:
            raise DomainError("tail_end_w must not exceed plateau_w")
        if not 0.0 <= self.ramp_duration <= self.tail_start * self.duration:
            raise DomainError("ramp_duration must be in [0, tail_start * duration]")
        if self.noise_amplitude < 0:
            raise DomainError("noise_amplitude must be non-negative")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted({0.0, self.ramp_duration, self.tail_start * self.duration,
                             self.duration}))

    def profile(self, t):
        """Noise-free power at times ``t``."""
        bps = [0.0, self.ramp_duration, self.tail_start * self.duration, self.duration]
        watts = [self.tail_end_w if self.ramp_duration > 0 else self.plateau_w,
                 self.plateau_w, self.plateau_w, self.tail_end_w]
        if self.tail_start == 1.0:
            watts[-1] = self.plateau_w
        # np.interp needs strictly increasing xp; drop zero-length pieces
        xp, fp = [bps[0]], [watts[0]]
        for x, w in zip(bps[1:], watts[1:]):
            if x > xp[-1]:
                xp.append(x)
                fp.append(w)
            else:
                fp[-1] = w
        return np.interp(t, xp, fp)

    @classmethod
    def from_json(cls, obj: dict) -> "HplTraceParams":
        if not isinstance(obj, dict):
            raise ParseError("trace params must be a JSON object")
        obj = {k: v for k, v in obj.items() if k not in ("comment", "dt")}
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ParseError(f"bad trace params: {exc}") from None


def synth_hpl_trace(params: HplTraceParams, dt: float,
                    rng: np.random.Generator | None = None,
                    meter_id: str = "synthetic") -> PowerTrace:
    """Sample the HPL-like profile every ``dt`` seconds.

    The profile ramps linearly from ``tail_end_w`` to the plateau over
    ``ramp_duration``, holds until ``tail_start * duration``, then decays
    linearly to ``tail_end_w``. Breakpoints are always sampled. When
    ``noise_amplitude > 0`` uniform noise is drawn from ``rng`` (default: a
    fresh generator seeded with ``params.seed``) and the result is clipped
    at 0 W.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    if dt > params.duration / 10:
        raise DomainError("dt must not exceed duration / 10")
    n = int(np.floor(params.duration / dt + 1e-9))
    grid = np.arange(n + 1) * dt
    bps = np.array(params.breakpoints)
    # drop grid points that would form a sliver segment next to a breakpoint
    near = np.min(np.abs(grid[:, None] - bps[None, :]), axis=1) <= 1e-9 * params.duration
    grid = np.unique(np.concatenate((grid[~near], bps)))
    power = params.profile(grid)
    if params.noise_amplitude > 0:
        if rng is None:
            rng = np.random.default_rng(params.seed)
        power = np.clip(power + rng.uniform(-params.noise_amplitude, params.noise_amplitude,
                                            size=len(grid)), 0.0, None)
    return PowerTrace(meter_id, grid, power)


def load_json(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", exc.lineno) from None
