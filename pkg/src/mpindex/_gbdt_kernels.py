"""Split-scan kernels for boosted-tree training.

Two arithmetically identical implementations of the exact greedy scan over
one presorted feature: a sequential loop compiled by numba and a vectorised
numpy fallback. Both accumulate gradient sums strictly left to right, so a
model trained on either path serialises to the same bytes.

Candidate splits sit between adjacent distinct values; the threshold is
their midpoint. Gain is

    0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - (GL+GR)^2/(HL+HR+lam))

and both children must carry at least ``min_child_weight`` of hessian mass.
Among equal gains the lowest threshold wins (first maximum in scan order).
"""

from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit

NO_GAIN = -np.inf


def _scan_split_loop(v, g, h, lam, min_child_weight):
    n = v.shape[0]
    g_total = 0.0
    h_total = 0.0
    for i in range(n):
        g_total += g[i]
        h_total += h[i]
    parent = g_total * g_total / (h_total + lam)
    best_gain = NO_GAIN
    best_threshold = 0.0
    best_left = -1
    gl = 0.0
    hl = 0.0
    for i in range(n - 1):
        gl += g[i]
        hl += h[i]
        if v[i] == v[i + 1]:
            continue
        hr = h_total - hl
        if hl < min_child_weight or hr < min_child_weight:
            continue
        gr = g_total - gl
        gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
        if gain > best_gain:
            best_gain = gain
            best_threshold = (v[i] + v[i + 1]) / 2.0
            best_left = i + 1
    return best_gain, best_threshold, best_left


def _scan_split_numpy(v, g, h, lam, min_child_weight):
    n = v.shape[0]
    if n < 2:
        return NO_GAIN, 0.0, -1
    gc = np.cumsum(g)
    hc = np.cumsum(h)
    g_total = gc[-1]
    h_total = hc[-1]
    parent = g_total * g_total / (h_total + lam)
    gl = gc[:-1]
    hl = hc[:-1]
    gr = g_total - gl
    hr = h_total - hl
    valid = (v[:-1] != v[1:]) & (hl >= min_child_weight) & (hr >= min_child_weight)
    if not valid.any():
        return NO_GAIN, 0.0, -1
    gains = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
    gains = np.where(valid, gains, NO_GAIN)
    i = int(np.argmax(gains))
    return float(gains[i]), float((v[i] + v[i + 1]) / 2.0), i + 1


if USE_NUMBA:
    scan_split = njit("Tuple((f8, f8, i8))(f8[::1], f8[::1], f8[::1], f8, f8)", cache=True)(
        _scan_split_loop
    )
else:
    scan_split = _scan_split_numpy
