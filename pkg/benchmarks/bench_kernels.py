"""Benchmark the hot SIR-reduction kernel: numba @njit vs pure numpy.

The numpy fallback is what FEMTOSHARE_NO_NUMBA=1 selects at import time;
here both implementations are timed directly on identical inputs.

Usage: python benchmarks/bench_kernels.py [n_trials] [n_faps]
"""

import sys
import time

import numpy as np

from femtoshare._kernels import _loop_outage_count, outage_count_numpy

try:
    from numba import njit

    outage_count_jit = njit(_loop_outage_count, cache=True)
except ImportError:
    outage_count_jit = None


def make_case(rng, n_trials, n_faps, n_rb=100):
    sig = rng.exponential(size=n_trials)
    fixed = rng.exponential(size=n_trials) * 1e-4
    hq = rng.exponential(size=(n_trials, n_faps))
    p_coef = rng.exponential(size=n_faps) * 1e-6
    px = rng.normal(0.0, 1500.0, n_faps)
    py = rng.normal(0.0, 1500.0, n_faps)
    ux = rng.normal(0.0, 700.0, n_trials)
    uy = rng.normal(0.0, 700.0, n_trials)
    masks = rng.random((n_faps, n_rb)) < 0.8
    rb = rng.integers(0, n_rb, n_trials).astype(np.int64)
    return (sig, fixed, hq, p_coef, px, py, ux, uy, 2.0, masks, rb, 3.16, 1.0, -1)


def bench(fn, args, repeats=20):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    n_trials = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
    n_faps = int(sys.argv[2]) if len(sys.argv) > 2 else 300
    rng = np.random.default_rng(0)
    args = make_case(rng, n_trials, n_faps)
    t_np = bench(outage_count_numpy, args)
    print(f"case: {n_trials} trials x {n_faps} interferers")
    print(f"numpy     : {t_np * 1e3:8.3f} ms  ({outage_count_numpy(*args)} outages)")
    if outage_count_jit is None:
        print("numba     : not installed")
        return
    outage_count_jit(*args)  # compile outside the timed region
    t_jit = bench(outage_count_jit, args)
    print(f"numba     : {t_jit * 1e3:8.3f} ms  ({outage_count_jit(*args)} outages)")
    print(f"speedup   : {t_np / t_jit:6.2f}x")


if __name__ == "__main__":
    main()
