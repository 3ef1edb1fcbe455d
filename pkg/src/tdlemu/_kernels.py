"""Inner FIR loops.

Two implementations with identical integer semantics: a numba ``@njit``
kernel and a pure-numpy one. The numba path is used when numba imports and
``TDLEMU_DISABLE_NUMBA`` is unset (or ``0``); set it to ``1`` to force numpy.

All kernels take the extended sample history ``ext`` (int64, shape
``(L + N - 1, 2)``, oldest first) and write ``L`` outputs. Output sample
``n`` reads ``ext[n + N - 1 - i]`` for tap ``i``.
"""

import os

import numpy as np

_DISABLE = os.environ.get("TDLEMU_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLE:
        raise ImportError("numba disabled by TDLEMU_DISABLE_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"

OUT_MIN = -32768
OUT_MAX = 32767


def fir_numpy(ext, idx, coeff, divisor, n_taps, out):
    """Sparse FIR, exact accumulation, one rounded division, saturation.

    Returns the number of saturated output components.
    """
    length = out.shape[0]
    acc = np.zeros((length, 2), dtype=np.int64)
    for i, b in zip(idx, coeff):
        start = n_taps - 1 - i
        acc += b * ext[start:start + length]
    # round half away from zero: floor((2|A| + D) / 2D)
    mag = (2 * np.abs(acc) + divisor) // (2 * divisor)
    y = np.where(acc < 0, -mag, mag)
    clipped = int(np.count_nonzero(y > OUT_MAX) + np.count_nonzero(y < OUT_MIN))
    np.clip(y, OUT_MIN, OUT_MAX, out=y)
    out[:] = y
    return clipped


if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def fir_numba(ext, idx, coeff, divisor, n_taps, out):
        length = out.shape[0]
        n_active = idx.shape[0]
        clipped = 0
        two_d = 2 * divisor
        for n in range(length):
            base = n + n_taps - 1
            for c in range(2):
                acc = np.int64(0)
                for t in range(n_active):
                    acc += coeff[t] * ext[base - idx[t], c]
                if acc < 0:
                    y = -((-2 * acc + divisor) // two_d)
                else:
                    y = (2 * acc + divisor) // two_d
                if y > OUT_MAX:
                    y = OUT_MAX
                    clipped += 1
                elif y < OUT_MIN:
                    y = OUT_MIN
                    clipped += 1
                out[n, c] = y
        return clipped

    fir = fir_numba
else:
    fir_numba = None
    fir = fir_numpy
