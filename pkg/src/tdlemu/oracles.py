"""Slow reference implementations used to check the fast paths.

Nothing here shares code with the engine kernels or the greedy planner.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def round_half_away_exact(q: Fraction) -> int:
    mag = math.floor(abs(q) + Fraction(1, 2))
    return -mag if q < 0 else mag


def reference_convolution(block, shift: int, taps, coeff_bits: int, taps_n: int, state=None):
    """Combined-mode channel output computed with Python integers and Fractions.

    ``taps`` is a sequence of ``(index, coeff)``. Returns a list of
    ``(i, q)`` tuples of plain ints, plus the count of saturated components.
    """
    history = [(0, 0)] * (taps_n - 1) if state is None else [tuple(map(int, s)) for s in state]
    xs = history + [(int(i), int(q)) for i, q in np.asarray(block).tolist()]
    offset = len(history)
    divisor = 2**shift * (2**coeff_bits - 1)
    out = []
    clipped = 0
    for n in range(offset, len(xs)):
        row = []
        for c in range(2):
            acc = 0
            for i, b in taps:
                acc += int(b) * xs[n - int(i)][c]
            y = round_half_away_exact(Fraction(acc, divisor))
            if y > 32767 or y < -32768:
                clipped += 1
                y = max(-32768, min(32767, y))
            row.append(y)
        out.append(tuple(row))
    return out, clipped


def reference_convolution_fast(block, shift: int, taps, coeff_bits: int, taps_n: int):
    """Same contract as :func:`reference_convolution` but vectorized over
    ``object`` arrays of Python ints; still exact, only faster."""
    x = np.asarray(block).astype(object)
    length = x.shape[0]
    ext = np.concatenate([np.zeros((taps_n - 1, 2), dtype=object) + 0, x])
    acc = np.zeros((length, 2), dtype=object) + 0
    for i, b in taps:
        start = taps_n - 1 - int(i)
        acc = acc + int(b) * ext[start:start + length]
    divisor = 2**shift * (2**coeff_bits - 1)
    flat = [round_half_away_exact(Fraction(int(a), divisor)) for a in acc.reshape(-1)]
    clipped = sum(1 for y in flat if y > 32767 or y < -32768)
    flat = [max(-32768, min(32767, y)) for y in flat]
    return np.array(flat, dtype=np.int64).reshape(length, 2), clipped


def exhaustive_plan_atten(atten_db: float, coeff_bits: int, shift_bits: int):
    """Best achievable ``(shift, coeff, achieved_db)`` over every legal pair."""
    top = 2**coeff_bits - 1
    b = np.arange(1, top + 1, dtype=np.float64)
    best = None
    for j in range(shift_bits + 1):
        achieved = 20.0 * np.log10(2.0**j * top / b)
        k = int(np.argmin(np.abs(achieved - atten_db)))
        cand = (abs(achieved[k] - atten_db), j, k + 1, float(achieved[k]))
        if best is None or cand[0] < best[0]:
            best = cand
    return best[1], best[2], best[3]


def brute_force_delay(reference, test) -> int:
    """Delay in samples by scanning every integer shift with a direct sum.

    Uses the plain (not overlap-normalized) correlation magnitude; intended
    for noise-like references where the true lag dominates.
    """
    x = np.asarray(reference, dtype=np.complex128)
    y = np.asarray(test, dtype=np.complex128)
    best_d, best_v = 0, -1.0
    for d in range(-(x.size - 1), y.size):
        # test[n] ~ ref[n - d]
        lo, hi = max(0, d), min(y.size, x.size + d)
        if hi <= lo:
            continue
        v = abs(np.sum(y[lo:hi] * np.conj(x[lo - d:hi - d])))
        if v > best_v + 1e-9 or (abs(v - best_v) <= 1e-9 and abs(d) < abs(best_d)):
            best_d, best_v = d, v
    return best_d
