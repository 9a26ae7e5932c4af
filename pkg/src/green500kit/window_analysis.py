"""Search over rule-compliant measurement windows.

For Level 1 the window with the lowest average power is found exactly for
piecewise-linear traces. Minimal-length windows come first: their energy is
a piecewise-quadratic function of the start position, so the optimum sits
on a piece boundary (a sample at either window end) or at an interior point
where the power at both ends is equal. Longer windows are then searched with
a Dinkelbach iteration on ``energy - lam * length``, whose optima have both
ends on crossings of ``p = lam`` or on the allowed range limits.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels, telemetry
from .errors import CoverageError, DomainError
from .methodology import MeasurementWindow, RunRecord, l1_bounds, level_rule

DEFAULT_STEPS = 1000
# relative tolerance for "equal" averages when breaking ties toward later windows
TIE_RTOL = 1e-12
MAX_DINKELBACH_ITER = 100
# near-tied candidates re-checked with the direct integrator
MAX_EXACT_TIES = 64


@dataclass
class WindowSweepResult:
    starts: np.ndarray
    curve_power: np.ndarray
    window_length: float
    best_window: MeasurementWindow
    best_avg_power: float
    fair_avg_power: float
    exploit_gap: float

    @property
    def curve(self) -> list[tuple[float, float]]:
        return list(zip(self.starts.tolist(), self.curve_power.tolist()))

    def summary(self) -> dict:
        return {
            "best_window": {"w0_s": self.best_window.w0, "w1_s": self.best_window.w1},
            "best_avg_power_w": self.best_avg_power,
            "fair_avg_power_w": self.fair_avg_power,
            "exploit_gap": self.exploit_gap,
            "window_length_s": self.window_length,
            "curve_points": int(len(self.starts)),
        }

    def curve_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start_s", "avg_power_w"])
        for s, p in zip(self.starts.tolist(), self.curve_power.tolist()):
            w.writerow([repr(s), repr(p)])
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _require_cover(trace: telemetry.PowerTrace, t0: float, t1: float):
    if not trace.covers(t0, t1):
        raise CoverageError(
            f"trace support [{trace.start}, {trace.end}] does not cover [{t0}, {t1}]")


def _grid(lo: float, last: float, step: float, scale: float) -> np.ndarray:
    n = int(math.floor((last - lo) / step + 1e-9))
    starts = lo + np.arange(n + 1) * step
    starts = starts[starts <= last]
    if last - starts[-1] > 1e-9 * scale:
        starts = np.append(starts, last)
    else:
        starts[-1] = last
    return starts


def _window_avgs(trace, starts: np.ndarray, length: float, workers: int) -> np.ndarray:
    cum = trace.cumulative()
    if workers <= 1 or len(starts) < 2 * workers:
        return kernels.window_energies(trace.t, trace.p, cum, starts, length) / length
    chunks = np.array_split(starts, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            lambda c: kernels.window_energies(trace.t, trace.p, cum, c, length), chunks))
    return np.concatenate(parts) / length


def efficiency_curve(trace: telemetry.PowerTrace, run: RunRecord,
                     window_length: float | None = None, step: float | None = None,
                     workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Average power of every Level-1 window of ``window_length`` on a grid.

    Starts run from the middle-80% lower bound in ``step`` increments; the
    last compliant start is always included. Returns ``(starts, avg_power)``.
    Results do not depend on ``workers``.
    """
    lo, hi, min_len = l1_bounds(run)
    T = run.duration
    if window_length is None:
        window_length = min_len
    if window_length < min_len * (1 - 1e-12) or window_length > (hi - lo) * (1 + 1e-12):
        raise DomainError(
            f"window length {window_length} outside Level-1 range [{min_len}, {hi - lo}]")
    window_length = min(window_length, hi - lo)
    if step is None:
        step = T / DEFAULT_STEPS
    if not step > 0:
        raise DomainError("step must be positive")
    _require_cover(trace, lo, hi)
    starts = _grid(lo, hi - window_length, step, T)
    return starts, _window_avgs(trace, starts, window_length, workers)


def _fixed_length_candidates(trace, lo: float, last: float, length: float) -> np.ndarray:
    t = trace.t
    inside = lambda x: x[(x > lo) & (x < last)]
    bounds = np.unique(np.concatenate(([lo, last], inside(t), inside(t - length))))
    if len(bounds) < 2:
        return bounds
    # derivative of window energy w.r.t. start is p(s+L) - p(s), linear per piece
    d = trace.value_at(bounds + length) - trace.value_at(bounds)
    da, db = d[:-1], d[1:]
    sa, sb = bounds[:-1], bounds[1:]
    m = (da < 0) & (db > 0)
    roots = sa[m] + da[m] / (da[m] - db[m]) * (sb[m] - sa[m])
    return np.unique(np.concatenate((bounds, roots)))


def _pick_latest_min(trace, starts: np.ndarray, values: np.ndarray, length: float) -> int:
    m = values.min()
    # prefix-table differences carry an absolute error proportional to total energy
    err = 64 * np.finfo(float).eps * float(np.abs(trace.cumulative()).max()) / length
    near = np.nonzero(values <= m + err + TIE_RTOL * abs(m))[0]
    if 1 < len(near) <= MAX_EXACT_TIES:
        exact = np.array([telemetry.average_power(trace, s, s + length) for s in starts[near]])
        near = near[exact <= exact.min() * (1 + TIE_RTOL)]
    return int(near[np.argmax(starts[near])])


def _min_fixed_length(trace, lo, hi, length):
    last = hi - length
    if last <= lo:
        s = lo
    else:
        cands = _fixed_length_candidates(trace, lo, last, length)
        avgs = _window_avgs(trace, cands, length, 1)
        s = float(cands[_pick_latest_min(trace, cands, avgs, length)])
    w = MeasurementWindow(s, s + length)
    return w, telemetry.average_power(trace, w.w0, w.w1)


def _crossings(trace, lam: float, lo: float, hi: float, downward: bool) -> np.ndarray:
    t, q = trace.t, trace.p - lam
    qa, qb = q[:-1], q[1:]
    m = (qa > 0) & (qb < 0) if downward else (qa < 0) & (qb > 0)
    x = t[:-1][m] + qa[m] / (qa[m] - qb[m]) * (t[1:][m] - t[:-1][m])
    return x[(x >= lo) & (x <= hi)]


def _longer_window_step(trace, lo, hi, length, lam):
    """Minimize ``E(b) - E(a) - lam (b - a)`` over ``b - a > length``.

    Returns ``(value, a, b)``; value is ``inf`` when no pair qualifies.
    """
    cum = trace.cumulative()
    samples = trace.t[(trace.t >= lo) & (trace.t <= hi)]
    a = np.unique(np.concatenate(([lo], samples, _crossings(trace, lam, lo, hi, True))))
    b = np.unique(np.concatenate(([hi], samples, _crossings(trace, lam, lo, hi, False))))
    a = a[a <= hi - length]
    b = b[b >= lo + length]
    if not len(a) or not len(b):
        return math.inf, lo, hi
    ga = kernels.energy_at(trace.t, trace.p, cum, a) - lam * (a - lo)
    gb = kernels.energy_at(trace.t, trace.p, cum, b) - lam * (b - lo)
    run_max = np.maximum.accumulate(ga)
    arg_max = np.zeros(len(ga), dtype=np.int64)
    best = 0
    for i in range(1, len(ga)):
        if ga[i] > ga[best]:
            best = i
        arg_max[i] = best
    idx = np.searchsorted(a, b - length, side="right") - 1
    ok = idx >= 0
    if not ok.any():
        return math.inf, lo, hi
    vals = np.full(len(b), math.inf)
    vals[ok] = gb[ok] - run_max[idx[ok]]
    j = int(np.argmin(vals))
    return float(vals[j]), float(a[arg_max[idx[j]]]), float(b[j])


def min_l1_window(trace: telemetry.PowerTrace, run: RunRecord
                  ) -> tuple[MeasurementWindow, float]:
    lo, hi, length = l1_bounds(run)
    _require_cover(trace, lo, hi)
    w, best = _min_fixed_length(trace, lo, hi, length)
    scale = max(abs(best), 1e-300) * (hi - lo)
    for _ in range(MAX_DINKELBACH_ITER):
        val, a, b = _longer_window_step(trace, lo, hi, length, best)
        if not val < -1e-12 * scale or b - a < length:
            break
        cand = telemetry.average_power(trace, a, b)
        if not cand < best * (1 - 1e-13):
            break
        w, best = MeasurementWindow(a, b), cand
    return w, best


def min_power_window(trace: telemetry.PowerTrace, run: RunRecord, level: int
                     ) -> tuple[MeasurementWindow, float]:
    """Compliant window with the lowest average power, and that power.

    Levels 2 and 3 admit only the full run. For Level 1, among equally good
    windows the latest minimal-length one is returned.
    """
    rule = level_rule(level)
    if rule.window_rule is None:
        _require_cover(trace, run.t_start, run.t_end)
        w = MeasurementWindow(run.t_start, run.t_end)
        return w, telemetry.average_power(trace, w.w0, w.w1)
    return min_l1_window(trace, run)


def exploit_gap(trace: telemetry.PowerTrace, run: RunRecord, step: float | None = None,
                workers: int = 1) -> WindowSweepResult:
    """Compare the best Level-1 window against the full-run average.

    The gap is ``(fair - best) / fair``. It is negative when the run's
    power outside the middle 80% is lower than anywhere inside it.
    """
    _require_cover(trace, run.t_start, run.t_end)
    fair = telemetry.average_power(trace, run.t_start, run.t_end)
    w, best = min_l1_window(trace, run)
    _, _, length = l1_bounds(run)
    starts, curve = efficiency_curve(trace, run, length, step, workers)
    return WindowSweepResult(
        starts=starts,
        curve_power=curve,
        window_length=length,
        best_window=w,
        best_avg_power=best,
        fair_avg_power=fair,
        exploit_gap=(fair - best) / fair if fair > 0 else 0.0,
    )
