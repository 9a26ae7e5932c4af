"""Pure-Python (numpy) integration kernels.

Reference implementation of the hot loops; ``_ckernels.pyx`` mirrors these
signatures one for one. Inputs are float64 arrays with ``t`` strictly
increasing and ``len(t) >= 2``. Coverage is checked by the callers.
"""
from __future__ import annotations

import numpy as np


def interp(t, p, x):
    """Piecewise-linear interpolant of (t, p) at scalar or array ``x``."""
    return np.interp(x, t, p)


def interval_energy(t, p, t0: float, t1: float) -> float:
    """Trapezoidal integral of the interpolant over ``[t0, t1]``."""
    lo = np.searchsorted(t, t0, side="right")
    hi = np.searchsorted(t, t1, side="left")
    xs = np.concatenate(([t0], t[lo:hi], [t1]))
    ps = np.concatenate(([np.interp(t0, t, p)], p[lo:hi], [np.interp(t1, t, p)]))
    return float(0.5 * np.sum(np.diff(xs) * (ps[1:] + ps[:-1])))


def cumulative_energy(t, p):
    """Energy from ``t[0]`` to every ``t[i]``; first entry is 0."""
    out = np.empty(len(t))
    out[0] = 0.0
    np.cumsum(0.5 * np.diff(t) * (p[1:] + p[:-1]), out=out[1:])
    return out


def energy_at(t, p, cum, x):
    """Energy from ``t[0]`` to each point of ``x`` using the prefix table."""
    x = np.asarray(x, dtype=np.float64)
    j = np.clip(np.searchsorted(t, x, side="right") - 1, 0, len(t) - 2)
    px = np.interp(x, t, p)
    return cum[j] + 0.5 * (x - t[j]) * (p[j] + px)


def window_energies(t, p, cum, starts, length: float):
    """Energy of every window ``[s, s + length]`` for ``s`` in ``starts``."""
    starts = np.asarray(starts, dtype=np.float64)
    return energy_at(t, p, cum, starts + length) - energy_at(t, p, cum, starts)
