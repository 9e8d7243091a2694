"""Hot inner loops of the simulator, with numba and pure-numpy variants.

Set ``HETNET_EE_DISABLE_NUMBA=1`` to force the numpy path (also used
automatically when numba is not importable).  Both variants share signatures
and must agree bit-for-bit on integer outputs and to roundoff on floats.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLED = os.environ.get("HETNET_EE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    njit = None
    HAVE_NUMBA = False

_CHUNK = 256


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def nearest_numpy(qx, qy, bx, by):
    """Index of and squared distance to the nearest point of (bx, by) for each query.

    Index is -1 (distance inf) when there are no points.
    """
    m = qx.shape[0]
    idx = np.full(m, -1, dtype=np.int64)
    d2 = np.full(m, np.inf)
    if bx.shape[0] == 0:
        return idx, d2
    for start in range(0, m, _CHUNK):
        stop = min(m, start + _CHUNK)
        dx = qx[start:stop, None] - bx[None, :]
        dy = qy[start:stop, None] - by[None, :]
        dist = dx * dx + dy * dy
        j = np.argmin(dist, axis=1)
        idx[start:stop] = j
        d2[start:stop] = dist[np.arange(stop - start), j]
    return idx, d2


def path_gain_sum_numpy(bx, by, h, alpha, skip):
    """Sum of h_i * r_i**-alpha seen from the origin, leaving out index ``skip``."""
    r2 = bx * bx + by * by
    terms = h * r2 ** (-0.5 * alpha)
    total = terms.sum()
    if skip >= 0:
        total -= terms[skip]
    return float(total)


def circle_covered_numpy(dx, dy, radius):
    """True when every point of the circle |y| = radius is strictly closer to
    some point (dx_i, dy_i) than to the origin.

    Point i claims the arc of half-width acos(d_i / (2 radius)) centred on its
    bearing.  The Voronoi cell of the origin is then inside the disk.
    """
    d = np.hypot(dx, dy)
    keep = (d < 2.0 * radius) & (d > 0)
    if not np.any(keep):
        return False
    phi = np.arctan2(dy[keep], dx[keep]) % (2 * math.pi)
    half = np.arccos(d[keep] / (2.0 * radius))
    start = phi - half
    end = phi + half
    # unwrap arcs crossing 0 / 2pi into two pieces
    wrap_lo = start < 0
    wrap_hi = end > 2 * math.pi
    starts = np.concatenate([np.maximum(start, 0.0), start[wrap_lo] + 2 * math.pi, np.zeros(wrap_hi.sum())])
    ends = np.concatenate([np.minimum(end, 2 * math.pi), np.full(wrap_lo.sum(), 2 * math.pi),
                           end[wrap_hi] - 2 * math.pi])
    order = np.argsort(starts, kind="stable")
    starts = starts[order]
    ends = ends[order]
    if starts[0] > 0.0:
        return False
    reach = np.maximum.accumulate(ends)
    if np.any(starts[1:] >= reach[:-1]):
        return False
    return bool(reach[-1] >= 2 * math.pi)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def nearest_numba(qx, qy, bx, by):
        m = qx.shape[0]
        n = bx.shape[0]
        idx = np.full(m, -1, dtype=np.int64)
        d2 = np.full(m, np.inf)
        for i in range(m):
            best = np.inf
            arg = -1
            x = qx[i]
            y = qy[i]
            for j in range(n):
                ddx = x - bx[j]
                ddy = y - by[j]
                dist = ddx * ddx + ddy * ddy
                if dist < best:
                    best = dist
                    arg = j
            idx[i] = arg
            d2[i] = best
        return idx, d2

    @njit(cache=True)
    def path_gain_sum_numba(bx, by, h, alpha, skip):
        total = 0.0
        e = -0.5 * alpha
        for j in range(bx.shape[0]):
            if j == skip:
                continue
            r2 = bx[j] * bx[j] + by[j] * by[j]
            total += h[j] * r2 ** e
        return total

    @njit(cache=True)
    def circle_covered_numba(dx, dy, radius):
        n = dx.shape[0]
        two_pi = 2.0 * math.pi
        starts = np.empty(2 * n)
        ends = np.empty(2 * n)
        k = 0
        for i in range(n):
            d = math.hypot(dx[i], dy[i])
            if d >= 2.0 * radius or d <= 0.0:
                continue
            phi = math.atan2(dy[i], dx[i]) % two_pi
            half = math.acos(d / (2.0 * radius))
            s = phi - half
            e = phi + half
            if s < 0.0:
                starts[k] = 0.0
                ends[k] = e
                k += 1
                starts[k] = s + two_pi
                ends[k] = two_pi
                k += 1
            elif e > two_pi:
                starts[k] = s
                ends[k] = two_pi
                k += 1
                starts[k] = 0.0
                ends[k] = e - two_pi
                k += 1
            else:
                starts[k] = s
                ends[k] = e
                k += 1
        if k == 0:
            return False
        order = np.argsort(starts[:k], kind="mergesort")
        if starts[order[0]] > 0.0:
            return False
        reach = ends[order[0]]
        for t in range(1, k):
            j = order[t]
            if starts[j] >= reach:
                return False
            if ends[j] > reach:
                reach = ends[j]
        return reach >= two_pi

    nearest = nearest_numba
    path_gain_sum = path_gain_sum_numba
    circle_covered = circle_covered_numba
else:
    nearest_numba = path_gain_sum_numba = circle_covered_numba = None
    nearest = nearest_numpy
    path_gain_sum = path_gain_sum_numpy
    circle_covered = circle_covered_numpy


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
