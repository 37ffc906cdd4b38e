# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_kernels_py``.

Results must match the pure-Python module exactly, random streams included.
"""

from libc.math cimport cos, sin, sqrt, INFINITY
from libc.stdint cimport uint64_t

import numpy as np


cdef inline uint64_t _mix(uint64_t *state) nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline long long _bounded(uint64_t *state, long long lo, long long hi) nogil:
    return lo + <long long>(_mix(state) % <uint64_t>(hi - lo + 1))


def splitmix64(state):
    cdef uint64_t s = <uint64_t>(state & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t z = _mix(&s)
    return int(s), int(z)


def cast_rays(double ox, double oy, angles, segs, discs, max_t):
    cdef double[::1] ang = np.ascontiguousarray(angles, dtype=np.float64)
    cdef double[:, ::1] sg = np.ascontiguousarray(
        np.asarray(segs, dtype=np.float64).reshape(-1, 4))
    cdef double[:, ::1] dc = np.ascontiguousarray(
        np.asarray(discs, dtype=np.float64).reshape(-1, 3))
    cdef Py_ssize_t n = ang.shape[0]
    cdef double[::1] lim = np.array(
        np.broadcast_to(np.asarray(max_t, dtype=np.float64), (n,)), dtype=np.float64)
    out_t = np.empty(n, dtype=np.float64)
    out_i = np.empty(n, dtype=np.int64)
    cdef double[::1] ot = out_t
    cdef long long[::1] oi = out_i
    cdef Py_ssize_t n_seg = sg.shape[0], n_disc = dc.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double dx, dy, best, ex, ey, den, wx, wy, t, u
    cdef double fx, fy, b, c, disc, sq
    cdef long long best_i
    with nogil:
        for k in range(n):
            dx = cos(ang[k])
            dy = sin(ang[k])
            best = INFINITY
            best_i = -1
            for i in range(n_seg):
                ex = sg[i, 2] - sg[i, 0]
                ey = sg[i, 3] - sg[i, 1]
                den = dx * ey - dy * ex
                if den == 0.0:
                    continue
                wx = sg[i, 0] - ox
                wy = sg[i, 1] - oy
                t = (wx * ey - wy * ex) / den
                u = (wx * dy - wy * dx) / den
                if t > 1e-9 and u >= 0.0 and u <= 1.0 and t < best:
                    best = t
                    best_i = i
            for j in range(n_disc):
                fx = ox - dc[j, 0]
                fy = oy - dc[j, 1]
                b = fx * dx + fy * dy
                c = fx * fx + fy * fy - dc[j, 2] * dc[j, 2]
                disc = b * b - c
                if disc < 0.0:
                    continue
                sq = sqrt(disc)
                t = -b - sq
                if t <= 1e-9:
                    t = -b + sq
                if t > 1e-9 and t < best:
                    best = t
                    best_i = n_seg + j
            if best > lim[k]:
                best = INFINITY
                best_i = -1
            ot[k] = best
            oi[k] = best_i
    return out_t, out_i


def channel_match(int n_tx, int n_rx, int target_tx, int target_rx,
                  long long trials, long long cyc_lo, long long cyc_hi,
                  seed, bint lockstep=False, int offset=0):
    cdef uint64_t state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef long long phase_tx = <long long>(_mix(&state) % <uint64_t>n_tx)
    cdef long long phase_rx = <long long>(_mix(&state) % <uint64_t>n_rx)
    cdef long long t_send = 0, t_rx_next = 0, rx_steps = 0, hits = 0
    cdef long long k, tx, rx
    with nogil:
        if not lockstep:
            t_rx_next = _bounded(&state, 0, cyc_hi)
        for k in range(trials):
            t_send += _bounded(&state, cyc_lo, cyc_hi)
            tx = (phase_tx + k) % n_tx
            if lockstep:
                rx = (phase_tx + k + offset) % n_rx
            else:
                while t_rx_next <= t_send:
                    t_rx_next += _bounded(&state, cyc_lo, cyc_hi)
                    rx_steps += 1
                rx = (phase_rx + rx_steps) % n_rx
            if tx == target_tx and rx == target_rx:
                hits += 1
    return hits
