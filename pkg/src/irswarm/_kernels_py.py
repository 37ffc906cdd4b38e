"""Pure-Python implementations of the hot loops.

These are the reference versions; ``_kernels.pyx`` mirrors them line for line
and must produce identical results (including the random streams).
"""

import math

MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(state):
    """Advance a splitmix64 state. Returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _bounded(state, lo, hi):
    state, z = splitmix64(state)
    return state, lo + z % (hi - lo + 1)


def cast_rays(ox, oy, angles, segs, discs, max_t):
    """Nearest hit along each ray.

    ``segs`` rows are ``(ax, ay, bx, by)``, ``discs`` rows ``(cx, cy, r)``.
    Returns two lists: hit distance (``inf`` for a miss) and hit index, where
    indices ``>= len(segs)`` refer to discs and ``-1`` means no hit.
    """
    n_seg = len(segs)
    out_t = []
    out_i = []
    for k in range(len(angles)):
        dx = math.cos(angles[k])
        dy = math.sin(angles[k])
        limit = max_t[k] if hasattr(max_t, "__len__") else max_t
        best = math.inf
        best_i = -1
        for i in range(n_seg):
            ax, ay, bx, by = segs[i][0], segs[i][1], segs[i][2], segs[i][3]
            ex = bx - ax
            ey = by - ay
            den = dx * ey - dy * ex
            if den == 0.0:
                continue
            wx = ax - ox
            wy = ay - oy
            t = (wx * ey - wy * ex) / den
            u = (wx * dy - wy * dx) / den
            if t > 1e-9 and 0.0 <= u <= 1.0 and t < best:
                best = t
                best_i = i
        for j in range(len(discs)):
            cx, cy, r = discs[j][0], discs[j][1], discs[j][2]
            fx = ox - cx
            fy = oy - cy
            b = fx * dx + fy * dy
            c = fx * fx + fy * fy - r * r
            disc = b * b - c
            if disc < 0.0:
                continue
            sq = math.sqrt(disc)
            t = -b - sq
            if t <= 1e-9:
                t = -b + sq
            if t > 1e-9 and t < best:
                best = t
                best_i = n_seg + j
        if best > limit:
            best = math.inf
            best_i = -1
        out_t.append(best)
        out_i.append(best_i)
    return out_t, out_i


def channel_match(n_tx, n_rx, target_tx, target_rx, trials, cyc_lo, cyc_hi,
                  seed, lockstep=False, offset=0):
    """Count send attempts where both rotating channels hit their targets.

    The sender advances its transmit channel once per cycle; the receiver
    advances its listen channel once per *its own* cycle. Cycle lengths are
    integer ticks drawn uniformly from ``[cyc_lo, cyc_hi]``. In lockstep mode
    the receiver shares the sender's cycle boundaries and sits ``offset``
    channels ahead of it.
    """
    state = seed & MASK64
    state, z = splitmix64(state)
    phase_tx = z % n_tx
    state, z = splitmix64(state)
    phase_rx = z % n_rx
    t_send = 0
    t_rx_next = 0
    rx_steps = 0
    hits = 0
    if not lockstep:
        state, first = _bounded(state, 0, cyc_hi)
        t_rx_next = first
    for k in range(trials):
        state, length = _bounded(state, cyc_lo, cyc_hi)
        t_send += length
        tx = (phase_tx + k) % n_tx
        if lockstep:
            rx = (phase_tx + k + offset) % n_rx
        else:
            while t_rx_next <= t_send:
                state, length = _bounded(state, cyc_lo, cyc_hi)
                t_rx_next += length
                rx_steps += 1
            rx = (phase_rx + rx_steps) % n_rx
        if tx == target_tx and rx == target_rx:
            hits += 1
    return hits
