"""Quick oracle suites behind ``tdlemu selfcheck``."""

from __future__ import annotations

import numpy as np

from . import _kernels, oracles
from .engine import EngineParams, TapSet, process_block
from .planner import (SHIFT_DB, PathSpec, atten_resolution_db, max_attenuation_db, plan_path,
                      worst_case_resolution_db)
from .verify import estimate_delay


def random_tapset(rng: np.random.Generator, params: EngineParams) -> TapSet:
    k = int(rng.integers(1, params.taps_n + 1))
    idx = np.sort(rng.choice(params.taps_n, size=k, replace=False))
    coeff = rng.integers(0, params.coeff_max + 1, size=k)
    shift = int(rng.integers(0, params.shift_bits + 1))
    return TapSet(shift, tuple(zip(idx.tolist(), coeff.tolist())))


def random_block(rng: np.random.Generator, length: int) -> np.ndarray:
    return rng.integers(-32768, 32768, size=(length, 2)).astype(np.int16)


def check_engine(params, cases, rng, length=512):
    for _ in range(cases):
        taps = random_tapset(rng, params)
        x = random_block(rng, length)
        y, stats, _ = process_block(x, taps, params)
        ref, clipped = oracles.reference_convolution_fast(x, taps.shift, taps.taps,
                                                          params.coeff_bits, params.taps_n)
        if not np.array_equal(y, ref) or stats.clipped != clipped:
            return False, f"mismatch for {taps}"
    return True, f"{cases} random tapsets bit-identical to exact reference"


def check_backends(params, rng):
    if _kernels.fir_numba is None:
        return True, "numba unavailable; numpy path only"
    taps = random_tapset(rng, params)
    x = random_block(rng, 2048).astype(np.int64)
    ext = np.concatenate([np.zeros((params.taps_n - 1, 2), np.int64), x])
    idx, coeff = taps.arrays()
    d = np.int64(params.divisor(taps.shift))
    a = np.empty((2048, 2), np.int64)
    b = np.empty((2048, 2), np.int64)
    ca = _kernels.fir_numba(ext, idx, coeff, d, params.taps_n, a)
    cb = _kernels.fir_numpy(ext, idx, coeff, d, params.taps_n, b)
    ok = np.array_equal(a, b) and ca == cb
    return ok, "numba and numpy kernels agree" if ok else "kernel mismatch"


def check_planner(params, cases, rng):
    """Greedy plan vs exhaustive search over every (shift, coeff) pair.

    The fixed worst-case bound only holds while the residual after the
    largest shift stays inside the top coefficient octave, i.e. up to
    ``(s + 1)`` shift steps; above that the greedy error may exceed the
    optimum by at most one coefficient step.
    """
    bound = worst_case_resolution_db(params.coeff_bits)
    bounded_top = (params.shift_bits + 1) * SHIFT_DB
    worst = 0.0
    for g in rng.uniform(0, max_attenuation_db(params), size=cases):
        g = float(g)
        p = plan_path(PathSpec(0.0, g), params)
        _, _, best = oracles.exhaustive_plan_atten(g, params.coeff_bits, params.shift_bits)
        err = abs(p.atten_error_db)
        slack = atten_resolution_db(p.coeff)
        if err > abs(best - g) + slack or (g <= bounded_top and err > bound):
            return False, f"{g:.4f} dB: error {err:.3g} dB"
        if g <= bounded_top:
            worst = max(worst, err)
    return True, f"worst planning error below {bounded_top:.2f} dB: {worst:.3g} dB <= {bound:.6f} dB"


def check_delay_sweep(params, rng, length=2048):
    x = random_block(rng, length)
    for k in range(params.taps_n):
        y, _, _ = process_block(x, TapSet(0, ((k, params.coeff_max),)), params)
        est = estimate_delay(x, y, params.clock_hz)
        if est.lag_samples != -k:
            return False, f"tap {k}: measured lag {est.lag_samples}"
    return True, f"taps 0..{params.taps_n - 1} recovered exactly"


def run_all(params: EngineParams, cases: int = 10, seed: int = 0):
    rng = np.random.default_rng(seed)
    yield ("engine_oracle", *check_engine(params, cases, rng))
    yield ("kernel_backends", *check_backends(params, rng))
    yield ("planner_oracle", *check_planner(params, max(cases, 1) * 5, rng))
    yield ("delay_sweep", *check_delay_sweep(params, rng))
