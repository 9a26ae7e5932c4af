"""Power-meter traces: ingestion, clock alignment, merging and exact
trapezoidal energy over arbitrary intervals."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from . import kernels
from .errors import CoverageError, DataError, DomainError, ParseError

CSV_HEADER = ("t_s", "power_w")


@dataclass(frozen=True)
class PowerSample:
    t: float
    p: float


@dataclass(frozen=True, eq=False)
class PowerTrace:
    """Samples of one meter, strictly increasing in time.

    Stored as two float64 arrays; ``samples`` materializes
    :class:`PowerSample` objects on demand.
    """

    meter_id: str
    t: np.ndarray
    p: np.ndarray
    epoch: str | None = None
    _cum: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.float64)
        p = np.ascontiguousarray(self.p, dtype=np.float64)
        if t.ndim != 1 or t.shape != p.shape:
            raise DataError("t and p must be 1-d arrays of equal length")
        if len(t) == 0:
            raise DataError("trace has no samples")
        if not np.all(np.isfinite(t)):
            raise DataError("non-finite timestamp")
        if not np.all(np.isfinite(p)):
            raise DataError("non-finite power value")
        if np.any(p < 0):
            i = int(np.argmax(p < 0))
            raise DataError(f"negative power {p[i]} at t={t[i]}")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise DataError("timestamps must be strictly increasing")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_samples(cls, samples: Iterable[PowerSample | tuple[float, float]],
                     meter_id: str = "meter", epoch: str | None = None) -> "PowerTrace":
        pairs = [(s.t, s.p) if isinstance(s, PowerSample) else tuple(s) for s in samples]
        t = np.array([a for a, _ in pairs], dtype=np.float64)
        p = np.array([b for _, b in pairs], dtype=np.float64)
        return cls(meter_id, t, p, epoch)

    @property
    def samples(self) -> list[PowerSample]:
        return [PowerSample(float(a), float(b)) for a, b in zip(self.t, self.p)]

    @property
    def start(self) -> float:
        return float(self.t[0])

    @property
    def end(self) -> float:
        return float(self.t[-1])

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other):
        if not isinstance(other, PowerTrace):
            return NotImplemented
        return (self.meter_id == other.meter_id and self.epoch == other.epoch
                and np.array_equal(self.t, other.t) and np.array_equal(self.p, other.p))

    def cumulative(self) -> np.ndarray:
        """Prefix energy table at the sample points (cached)."""
        if self._cum is None:
            self._require_integrable()
            object.__setattr__(self, "_cum", kernels.cumulative_energy(self.t, self.p))
        return self._cum

    def value_at(self, x):
        """Interpolated power at ``x`` (scalar or array) inside the support."""
        return kernels.interp(self.t, self.p, x)

    def covers(self, t0: float, t1: float) -> bool:
        return self.start <= t0 and t1 <= self.end

    def _require_integrable(self):
        if len(self.t) < 2:
            raise DataError("integration needs at least two samples")


def _stamp(value: str, line: int, what: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ParseError(f"{what} {value!r} is not a number", line) from None
    return x


def _build(rows: list[tuple[float, float, int]], meter_id: str, epoch: str | None) -> PowerTrace:
    for t, p, line in rows:
        if not math.isfinite(t):
            raise DataError(f"line {line}: non-finite timestamp")
        if not math.isfinite(p):
            raise DataError(f"line {line}: non-finite power")
        if p < 0:
            raise DataError(f"line {line}: negative power {p}")
    if not rows:
        raise DataError("trace has no samples")
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if b[0] == a[0]:
            raise DataError(f"duplicate timestamp {a[0]} (lines {a[2]} and {b[2]})")
    return PowerTrace(meter_id, [r[0] for r in rows], [r[1] for r in rows], epoch)


def _parse_csv(text: str, meter_id: str) -> PowerTrace:
    epoch = None
    rows = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            key = key.strip().lower()
            if sep and key == "epoch":
                epoch = value.strip()
            elif sep and key == "meter_id":
                meter_id = value.strip()
            continue
        cells = next(csv.reader([line]))
        cells = [c.strip() for c in cells]
        if not header_seen and not rows and tuple(cells) == CSV_HEADER:
            header_seen = True
            continue
        if len(cells) != 2:
            raise ParseError(f"expected 2 fields, got {len(cells)}", lineno)
        rows.append((_stamp(cells[0], lineno, "timestamp"),
                     _stamp(cells[1], lineno, "power"), lineno))
    return _build(rows, meter_id, epoch)


def _parse_jsonl(text: str, meter_id: str) -> PowerTrace:
    epoch = None
    rows = []
    first = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        if first and "t_s" not in obj and ("meter_id" in obj or "epoch" in obj):
            meter_id = str(obj.get("meter_id", meter_id))
            epoch = None if obj.get("epoch") is None else str(obj["epoch"])
            first = False
            continue
        first = False
        try:
            t, p = obj["t_s"], obj["power_w"]
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", lineno) from None
        if isinstance(t, bool) or isinstance(p, bool) or not all(
                isinstance(v, (int, float)) for v in (t, p)):
            raise ParseError("t_s and power_w must be numbers", lineno)
        rows.append((float(t), float(p), lineno))
    return _build(rows, meter_id, epoch)


def ingest_trace(source: bytes | str | IO, format: str = "csv",
                 meter_id: str = "meter") -> PowerTrace:
    """Parse a CSV or JSONL trace.

    ``source`` may be bytes, text, or a binary/text stream. Rows are sorted
    by time; duplicate timestamps and negative power raise :class:`DataError`,
    malformed rows raise :class:`ParseError` carrying the line number.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8 text ({exc.reason})") from None
    if format == "csv":
        return _parse_csv(source, meter_id)
    if format == "jsonl":
        return _parse_jsonl(source, meter_id)
    raise DomainError(f"unknown trace format {format!r}")


def load_trace(path, format: str | None = None) -> PowerTrace:
    """Read a trace file; the format is inferred from the suffix if not given."""
    path = str(path)
    if format is None:
        format = "jsonl" if path.endswith((".jsonl", ".ndjson")) else "csv"
    stem = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    with open(path, "rb") as fh:
        return ingest_trace(fh, format, meter_id=stem)


def dump_csv(trace: PowerTrace) -> str:
    buf = io.StringIO()
    buf.write(f"# meter_id: {trace.meter_id}\n")
    if trace.epoch is not None:
        buf.write(f"# epoch: {trace.epoch}\n")
    buf.write(",".join(CSV_HEADER) + "\n")
    for a, b in zip(trace.t.tolist(), trace.p.tolist()):
        buf.write(f"{a!r},{b!r}\n")
    return buf.getvalue()


def align(trace: PowerTrace, offset: float) -> PowerTrace:
    """Shift every timestamp by ``offset`` seconds."""
    return PowerTrace(trace.meter_id, trace.t + float(offset), trace.p, trace.epoch)


def _check_interval(trace: PowerTrace, t0: float, t1: float):
    trace._require_integrable()
    if not t0 < t1:
        raise DomainError(f"empty interval [{t0}, {t1}]")
    if not trace.covers(t0, t1):
        raise CoverageError(
            f"interval [{t0}, {t1}] outside trace support [{trace.start}, {trace.end}]")


def energy(trace: PowerTrace, t0: float, t1: float) -> float:
    """Joules over ``[t0, t1]`` from the piecewise-linear interpolant."""
    _check_interval(trace, t0, t1)
    return kernels.interval_energy(trace.t, trace.p, float(t0), float(t1))


def average_power(trace: PowerTrace, t0: float, t1: float) -> float:
    """Mean watts over ``[t0, t1]``; exact for piecewise-linear power."""
    return energy(trace, t0, t1) / (t1 - t0)


def merge_traces(traces: Iterable[PowerTrace]) -> PowerTrace:
    """Pointwise sum of the interpolants on the common support.

    The result is sampled at the union of all timestamps that fall inside
    the intersection of supports, plus the intersection endpoints.
    """
    traces = list(traces)
    if not traces:
        raise DomainError("no traces to merge")
    if len(traces) == 1:
        return traces[0]
    epochs = {tr.epoch for tr in traces}
    if len(epochs) > 1:
        raise DataError(f"traces declare different epochs: {sorted(map(str, epochs))}")
    lo = max(tr.start for tr in traces)
    hi = min(tr.end for tr in traces)
    if not lo < hi:
        raise CoverageError(f"trace supports do not overlap (common support [{lo}, {hi}])")
    grid = np.unique(np.concatenate([tr.t for tr in traces]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    total = np.zeros_like(grid)
    for tr in traces:
        total += kernels.interp(tr.t, tr.p, grid)
    meter_id = "+".join(tr.meter_id for tr in traces)
    return PowerTrace(meter_id, grid, total, traces[0].epoch)
