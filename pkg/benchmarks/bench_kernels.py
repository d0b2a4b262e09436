#!/usr/bin/env python3
"""Benchmark the compiled DP kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from diqsv import _kernels
from diqsv._kernels import pure
from diqsv.bounds import pass_threshold

try:
    from diqsv._kernels import _fast
except ImportError:
    _fast = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"selected backend: {_kernels.BACKEND}")
    if _fast is None:
        print("compiled extension not available; timing the fallback only")
    rng = np.random.default_rng(0)

    print(f"\n{'kernel':<28}{'size':>8}{'numpy':>12}{'compiled':>12}{'speedup':>9}")
    for n in (500, 2000, 5000):
        probs = rng.uniform(0.9, 0.99, size=n)
        thr = pass_threshold(0.95, n)
        t_pure = timeit(lambda: pure.pb_tail_probability(probs, thr), args.repeats)
        row = f"{'pb_tail_probability':<28}{n:>8}{t_pure * 1e3:>10.2f}ms"
        if _fast is not None:
            p = np.ascontiguousarray(probs)
            t_fast = timeit(lambda: _fast.pb_tail_probability(p, thr), args.repeats)
            row += f"{t_fast * 1e3:>10.2f}ms{t_pure / t_fast:>8.1f}x"
        print(row)

    for n in (100, 200, 300):
        probs = rng.uniform(0.9, 0.99, size=n)
        thresholds = np.array([pass_threshold(0.95, m) for m in range(n + 1)], dtype=np.int64)
        t_pure = timeit(lambda: pure.certification_pass_probability(probs, 0.5, thresholds), args.repeats)
        row = f"{'certification_pass_prob':<28}{n:>8}{t_pure * 1e3:>10.2f}ms"
        if _fast is not None:
            p = np.ascontiguousarray(probs)
            t_fast = timeit(lambda: _fast.certification_pass_probability(p, 0.5, thresholds), args.repeats)
            row += f"{t_fast * 1e3:>10.2f}ms{t_pure / t_fast:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
