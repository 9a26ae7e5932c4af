"""Green500 measurement-level rules, efficiency arithmetic and the
submission consistency check."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

from . import telemetry
from .errors import DataError, DomainError, ParseError

#: Default relative tolerance of :func:`consistency_check`.
DEFAULT_TOLERANCE = 0.01
# Relative slack (times T) when comparing window ends for the full-runtime rule.
FULL_RUNTIME_SLACK = 1e-9


@dataclass(frozen=True)
class RunRecord:
    t_start: float
    t_end: float
    performance: float  # GFLOPS
    nodes_measured: int
    nodes_total: int
    network_included: bool = False
    reported_avg_power: float | None = None  # W
    reported_efficiency: float | None = None  # MFLOPS/W

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise DataError(f"run must have t_start < t_end, got [{self.t_start}, {self.t_end}]")
        if not self.performance > 0:
            raise DataError("performance must be positive")
        if not 1 <= self.nodes_measured <= self.nodes_total:
            raise DataError(
                f"need 1 <= nodes_measured <= nodes_total, got {self.nodes_measured}/{self.nodes_total}")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def system_fraction(self) -> Fraction:
        return Fraction(self.nodes_measured, self.nodes_total)

    def to_json(self) -> dict:
        out = {
            "t_start_s": self.t_start,
            "t_end_s": self.t_end,
            "performance_gflops": self.performance,
            "nodes_measured": self.nodes_measured,
            "nodes_total": self.nodes_total,
            "network_included": self.network_included,
        }
        if self.reported_avg_power is not None:
            out["reported_avg_power_w"] = self.reported_avg_power
        if self.reported_efficiency is not None:
            out["reported_efficiency_mflops_per_w"] = self.reported_efficiency
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "RunRecord":
        if not isinstance(obj, dict):
            raise ParseError("run record must be a JSON object")
        try:
            return cls(
                t_start=float(obj["t_start_s"]),
                t_end=float(obj["t_end_s"]),
                performance=float(obj["performance_gflops"]),
                nodes_measured=int(obj["nodes_measured"]),
                nodes_total=int(obj["nodes_total"]),
                network_included=bool(obj.get("network_included", False)),
                reported_avg_power=_opt_float(obj.get("reported_avg_power_w")),
                reported_efficiency=_opt_float(obj.get("reported_efficiency_mflops_per_w")),
            )
        except KeyError as exc:
            raise ParseError(f"run record missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DataError):
                raise
            raise ParseError(f"bad run record value: {exc}") from None


def _opt_float(v):
    return None if v is None else float(v)


def load_run(path) -> RunRecord:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", exc.lineno) from None
    return RunRecord.from_json(obj)


@dataclass(frozen=True)
class MeasurementWindow:
    w0: float
    w1: float

    def __post_init__(self):
        if not self.w0 < self.w1:
            raise DomainError(f"window needs w0 < w1, got [{self.w0}, {self.w1}]")

    @property
    def length(self) -> float:
        return self.w1 - self.w0

    @classmethod
    def parse(cls, text: str) -> "MeasurementWindow":
        """Parse ``"w0:w1"``."""
        a, sep, b = text.partition(":")
        if not sep:
            raise ParseError(f"window must look like w0:w1, got {text!r}")
        try:
            return cls(float(a), float(b))
        except ValueError:
            raise ParseError(f"window must look like w0:w1, got {text!r}") from None


@dataclass(frozen=True)
class LevelRule:
    level: int
    min_system_fraction: Fraction
    requires_network: bool
    # None means the full runtime; otherwise (min share of middle, middle share of run)
    window_rule: tuple[float, float] | None


LEVELS = {
    1: LevelRule(1, Fraction(1, 64), False, (0.20, 0.80)),
    2: LevelRule(2, Fraction(1, 8), True, None),
    3: LevelRule(3, Fraction(1), True, None),
}


def level_rule(level: int) -> LevelRule:
    try:
        return LEVELS[int(level)]
    except (KeyError, ValueError, TypeError):
        raise DomainError(f"measurement level must be 1, 2 or 3, got {level!r}") from None


@dataclass
class Verdict:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations)}


def _slack(run: RunRecord, rel: float) -> float:
    # absolute term covers rounding of window ends at large timestamp offsets
    mag = max(abs(run.t_start), abs(run.t_end))
    return rel * run.duration + 16 * math.ulp(mag)


def l1_bounds(run: RunRecord) -> tuple[float, float, float]:
    """``(lo, hi, min_length)`` of Level-1 windows for ``run``."""
    share, middle = LEVELS[1].window_rule
    T = run.duration
    margin = round((1.0 - middle) / 2.0, 12)
    return run.t_start + margin * T, run.t_end - margin * T, round(share * middle, 12) * T


def validate_window(run: RunRecord, w: MeasurementWindow, level: int) -> Verdict:
    """Check a measurement window against the level's timing rule.

    Level 1 windows must lie inside the middle 80% of the run and span at
    least 20% of it. Levels 2 and 3 must cover the full runtime.
    """
    rule = level_rule(level)
    T = run.duration
    v = Verdict()
    if rule.window_rule is None:
        slack = _slack(run, FULL_RUNTIME_SLACK)
        if abs(w.w0 - run.t_start) > slack or abs(w.w1 - run.t_end) > slack:
            v.violations.append(
                f"level {rule.level} requires the full runtime [{run.t_start:g}, {run.t_end:g}],"
                f" got [{w.w0:g}, {w.w1:g}]")
        return v
    lo, hi, min_len = l1_bounds(run)
    slack = _slack(run, 1e-12)
    if w.w0 < lo - slack:
        v.violations.append(f"window starts at {w.w0:g}, before the middle-80% boundary {lo:g}")
    if w.w1 > hi + slack:
        v.violations.append(f"window ends at {w.w1:g}, after the middle-80% boundary {hi:g}")
    if w.length < min_len - slack:
        v.violations.append(f"window length {w.length:g} < required {min_len:g}")
    return v


def validate_fraction(run: RunRecord, level: int) -> Verdict:
    rule = level_rule(level)
    v = Verdict()
    frac = run.system_fraction
    if frac < rule.min_system_fraction:
        v.violations.append(
            f"measured fraction {run.nodes_measured}/{run.nodes_total} below level {rule.level}"
            f" minimum {rule.min_system_fraction}")
    if rule.requires_network and not run.network_included:
        v.violations.append(f"level {rule.level} requires network equipment to be measured")
    return v


def efficiency(performance: float, avg_power: float) -> float:
    """MFLOPS/W from GFLOPS and average watts."""
    if not avg_power > 0:
        raise DomainError(f"average power must be positive, got {avg_power}")
    return 1000.0 * performance / avg_power


def implied_power(performance: float, eff: float) -> float:
    """Average watts implied by a GFLOPS figure and an MFLOPS/W figure."""
    if not eff > 0:
        raise DomainError(f"efficiency must be positive, got {eff}")
    return 1000.0 * performance / eff


@dataclass
class ConsistencyResult:
    ok: bool
    tolerance: float
    computed_efficiency: float
    implied_avg_power: float
    checks: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def consistency_check(run: RunRecord, computed_efficiency: float,
                      tolerance: float = DEFAULT_TOLERANCE) -> ConsistencyResult:
    """Compare the reported figures of ``run`` against the computed efficiency.

    Checks performed when the reported value exists:

    * ``efficiency``: reported vs computed MFLOPS/W.
    * ``avg_power``: reported watts vs the watts implied by the computed
      efficiency.
    * ``reported_pair``: reported watts vs the watts implied by the reported
      efficiency (the record's internal arithmetic).
    """
    checks = []
    implied = implied_power(run.performance, computed_efficiency)

    def add(name, reported, expected):
        dev = _rel(expected, reported)
        checks.append({"check": name, "reported": reported, "expected": expected,
                       "rel_deviation": dev, "ok": dev <= tolerance})

    if run.reported_efficiency is not None:
        add("efficiency", run.reported_efficiency, computed_efficiency)
    if run.reported_avg_power is not None:
        add("avg_power", run.reported_avg_power, implied)
    if run.reported_efficiency is not None and run.reported_avg_power is not None:
        add("reported_pair", run.reported_avg_power,
            implied_power(run.performance, run.reported_efficiency))
    return ConsistencyResult(
        ok=all(c["ok"] for c in checks),
        tolerance=tolerance,
        computed_efficiency=computed_efficiency,
        implied_avg_power=implied,
        checks=checks,
    )


@dataclass
class ComplianceReport:
    level: int
    window: MeasurementWindow
    window_verdict: Verdict
    fraction_verdict: Verdict
    avg_power: float
    system_power: float
    efficiency: float
    consistency: ConsistencyResult

    @property
    def ok(self) -> bool:
        return self.window_verdict.ok and self.fraction_verdict.ok and self.consistency.ok

    def to_json(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "level": self.level,
            "window": {"w0_s": self.window.w0, "w1_s": self.window.w1},
            "window_verdict": self.window_verdict.to_json(),
            "fraction_verdict": self.fraction_verdict.to_json(),
            "avg_power_w": self.avg_power,
            "system_power_w": self.system_power,
            "efficiency_mflops_per_w": self.efficiency,
            "consistency": self.consistency.to_json(),
        }


def compliance_report(trace: telemetry.PowerTrace, run: RunRecord, w: MeasurementWindow,
                      level: int, network_power: float = 0.0,
                      tolerance: float = DEFAULT_TOLERANCE) -> ComplianceReport:
    """Validate ``w`` and the system fraction, then compute efficiency.

    The metered average is scaled to the whole system with
    :func:`green500kit.aggregation.extrapolate_power` before dividing; with
    every node metered and ``network_power=0`` that scaling is the identity.
    """
    from .aggregation import extrapolate_power

    avg = telemetry.average_power(trace, w.w0, w.w1)
    system = extrapolate_power(avg, run.nodes_measured, run.nodes_total, network_power)
    eff = efficiency(run.performance, system)
    return ComplianceReport(
        level=level_rule(level).level,
        window=w,
        window_verdict=validate_window(run, w, level),
        fraction_verdict=validate_fraction(run, level),
        avg_power=avg,
        system_power=system,
        efficiency=eff,
        consistency=consistency_check(run, eff, tolerance),
    )
