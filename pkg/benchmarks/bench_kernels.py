"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size 256] [--repeats 5]

Times the two hot per-pixel kernels (median filter, non-local means) on
a random image and reports the per-call time of each backend plus the
speedup. Also cross-checks that both backends produce the same output.
"""

import argparse
import time

import numpy as np

from denoreg.kernels import _pykernels

try:
    from denoreg.kernels import _cykernels
except ImportError:
    _cykernels = None


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.Generator(np.random.PCG64(0))
    x = rng.uniform(0, 255, (args.size, args.size))

    cases = [
        ("median 3x3", lambda impl: impl.median_filter(x, 3)),
        ("median 5x5", lambda impl: impl.median_filter(x, 5)),
        ("nlm p1 s5 h=400", lambda impl: impl.nlm_filter(x, 400.0, 1, 5)),
        ("nlm p2 s7 h=400", lambda impl: impl.nlm_filter(x, 400.0, 2, 7)),
    ]

    print(f"image {args.size}x{args.size}, best of {args.repeats}")
    header = f"{'kernel':18s} {'numpy':>10s} {'cython':>10s} {'speedup':>8s} {'max |diff|':>12s}"
    print(header)
    print("-" * len(header))
    for name, call in cases:
        t_py = best_time(lambda: call(_pykernels), args.repeats)
        if _cykernels is None:
            print(f"{name:18s} {t_py * 1e3:9.2f}ms {'n/a':>10s} {'n/a':>8s} {'n/a':>12s}")
            continue
        t_cy = best_time(lambda: call(_cykernels), args.repeats)
        diff = float(np.max(np.abs(call(_pykernels) - call(_cykernels))))
        print(f"{name:18s} {t_py * 1e3:9.2f}ms {t_cy * 1e3:9.2f}ms {t_py / t_cy:7.1f}x {diff:12.3e}")

    if _cykernels is None:
        print("\ncompiled extension not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
