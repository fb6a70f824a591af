"""Compare the numba and numpy kernel paths.

Usage: python benchmarks/bench_kernels.py [--repeat 50]

Both implementations are imported directly, so the environment flag does not
matter here. The first numba call (compilation or cache load) is timed
separately from the steady state.
"""

import argparse
import time

import numpy as np

from confnull import _kernels as k


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    K, q, N = 256, 8, 16
    prop = (
        rng.standard_normal(N),
        np.exp(-rng.random((K - 1, N))),
        rng.standard_normal((K - 1, q, N)),
        rng.standard_normal((K - 1, q, N)),
    )
    wsum = (rng.random((K - 1, q, N)), rng.standard_normal((K - 1, q, N)))
    rows = rng.standard_normal((K, N))
    idx = rng.integers(0, K - 1, size=(K - 1, q)).astype(np.int64)
    interp = (rows, idx, rng.random((K - 1, q)))
    return {"propagate": prop, "weighted_sum": wsum, "interp_rows": interp}


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    print(f"numba available: {k.HAS_NUMBA}; active backend: {k.backend()}")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<14}{'numpy [us]':>12}{'numba first [ms]':>18}{'numba [us]':>12}{'speedup':>9}{'max diff':>11}")
    for name, inputs in cases(rng).items():
        f_np = getattr(k, f"{name}_numpy")
        f_nb = getattr(k, f"{name}_numba")
        t0 = time.perf_counter()
        out_nb = f_nb(*inputs)
        first = time.perf_counter() - t0
        out_np = f_np(*inputs)
        diff = float(np.max(np.abs(out_nb - out_np)))
        t_np = _time(f_np, inputs, args.repeat)
        t_nb = _time(f_nb, inputs, args.repeat)
        print(f"{name:<14}{t_np * 1e6:>12.1f}{first * 1e3:>18.1f}{t_nb * 1e6:>12.1f}{t_np / t_nb:>9.2f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
