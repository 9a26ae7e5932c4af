# cython: language_level=3
"""Compiled integration kernels; same contract as ``_pykernels``."""
import numpy as np

cimport numpy as cnp
from libc.stddef cimport size_t

cnp.import_array()


cdef inline Py_ssize_t _segment(const double[::1] t, double x) noexcept nogil:
    # largest j with t[j] <= x, clamped to [0, n-2]
    cdef Py_ssize_t lo = 0, hi = t.shape[0] - 1, mid
    if x <= t[0]:
        return 0
    if x >= t[hi]:
        return hi - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if t[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


cdef inline double _interp_at(const double[::1] t, const double[::1] p,
                              Py_ssize_t j, double x) noexcept nogil:
    cdef Py_ssize_t n = t.shape[0]
    if x <= t[0]:
        return p[0]
    if x >= t[n - 1]:
        return p[n - 1]
    if x == t[j]:
        return p[j]
    return p[j] + (p[j + 1] - p[j]) * ((x - t[j]) / (t[j + 1] - t[j]))


def interp(t, p, x):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    if np.ndim(x) == 0:
        return _interp_at(tv, pv, _segment(tv, <double>x), <double>x)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t i, m = xv.shape[0]
    out = np.empty(m)
    cdef double[::1] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _interp_at(tv, pv, _segment(tv, xv[i]), xv[i])
    return out


def interval_energy(t, p, double t0, double t1):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0], j
    cdef double acc = 0.0, x_prev, p_prev, p1
    with nogil:
        j = _segment(tv, t0)
        x_prev = t0
        p_prev = _interp_at(tv, pv, j, t0)
        j += 1
        while j < n and tv[j] < t1:
            if tv[j] > x_prev:
                acc += 0.5 * (tv[j] - x_prev) * (pv[j] + p_prev)
                x_prev = tv[j]
                p_prev = pv[j]
            j += 1
        p1 = _interp_at(tv, pv, _segment(tv, t1), t1)
        acc += 0.5 * (t1 - x_prev) * (p1 + p_prev)
    return acc


def cumulative_energy(t, p):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t i, n = tv.shape[0]
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double acc = 0.0
    with nogil:
        ov[0] = 0.0
        for i in range(1, n):
            acc += 0.5 * (tv[i] - tv[i - 1]) * (pv[i] + pv[i - 1])
            ov[i] = acc
    return out


cdef inline double _energy_at(const double[::1] t, const double[::1] p,
                              const double[::1] cum, double x) noexcept nogil:
    cdef Py_ssize_t j = _segment(t, x)
    return cum[j] + 0.5 * (x - t[j]) * (p[j] + _interp_at(t, p, j, x))


def energy_at(t, p, cum, x):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(cum, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef Py_ssize_t i, m = xv.shape[0]
    out = np.empty(m)
    cdef double[::1] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _energy_at(tv, pv, cv, xv[i])
    if np.ndim(x) == 0:
        return out[0]
    return out


def window_energies(t, p, cum, starts, double length):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(cum, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(starts, dtype=np.float64)
    cdef Py_ssize_t i, m = sv.shape[0]
    out = np.empty(m)
    cdef double[::1] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _energy_at(tv, pv, cv, sv[i] + length) - _energy_at(tv, pv, cv, sv[i])
    return out
