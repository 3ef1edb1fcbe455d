"""Throughput of the numba kernel vs the numpy fallback.

    python benchmarks/bench_engine.py [--samples 1000000] [--taps-active 3 42]

Compilation is excluded from the numba timing (one warm-up call first).
"""

import argparse
import time

import numpy as np

from tdlemu import _kernels
from tdlemu.engine import EngineParams
from tdlemu.selfcheck import random_block


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--taps-active", type=int, nargs="+", default=[1, 3, 10, 42])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = EngineParams()
    rng = np.random.default_rng(0)
    x = random_block(rng, args.samples).astype(np.int64)
    ext = np.concatenate([np.zeros((params.taps_n - 1, 2), np.int64), x])
    out = np.empty((args.samples, 2), np.int64)
    divisor = np.int64(params.divisor(2))

    print(f"{'active taps':>11} {'numpy MS/s':>11} {'numba MS/s':>11} {'speedup':>8}")
    for k in args.taps_active:
        idx = np.sort(rng.choice(params.taps_n, size=k, replace=False)).astype(np.int64)
        coeff = rng.integers(1, params.coeff_max + 1, size=k).astype(np.int64)
        t_np = best_of(lambda: _kernels.fir_numpy(ext, idx, coeff, divisor, params.taps_n, out), args.repeat)
        ref = out.copy()
        if _kernels.fir_numba is not None:
            _kernels.fir_numba(ext, idx, coeff, divisor, params.taps_n, out)
            t_nb = best_of(lambda: _kernels.fir_numba(ext, idx, coeff, divisor, params.taps_n, out),
                           args.repeat)
            assert np.array_equal(out, ref), "backends disagree"
            nb = f"{args.samples / t_nb / 1e6:11.1f} {t_np / t_nb:7.2f}x"
        else:
            nb = f"{'n/a':>11} {'-':>8}"
        print(f"{k:>11} {args.samples / t_np / 1e6:11.1f} {nb}")


if __name__ == "__main__":
    main()
