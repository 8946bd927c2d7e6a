#!/usr/bin/env python3
"""Benchmark the jitted kernels against their pure-numpy sources.

The package selects its kernel lane at import time (numba when available,
pure numpy with KEANON_NUMBA=0); this script times both lanes on the same
inputs and checks they return identical results. Compile time is reported
separately from steady-state timings.

Usage: python benchmarks/bench_kernels.py [--n 32440] [--repeats 5]
"""

import argparse
import time

import numpy as np

from keanon import kernels


def timeit(fn, args, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def equal(a, b):
    if isinstance(a, tuple):
        return all(equal(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return bool(np.array_equal(a, b))
    return a == b


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=32440)
    parser.add_argument("--k", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(1)))
    n, q = args.n, 4
    data = np.ascontiguousarray(np.round(rng.uniform(0, 100, size=(n, q))))
    ranges = np.ascontiguousarray(data.max(axis=0) - data.min(axis=0))
    orig = rng.uniform(100, 200, size=n)
    noisy = orig + rng.normal(0, 5, size=n)
    code_cols = rng.integers(0, 40, size=(q, 6, n)).astype(np.int64)
    levels = np.array([2, 0, 1, 3], dtype=np.int64)
    strides = np.array([1, 40, 1600, 64000], dtype=np.int64)
    counts = rng.integers(0, 50, size=5000).astype(np.int64)

    cases = [
        ("mondrian_partition", kernels.mondrian_partition,
         kernels.mondrian_partition_py, (data, ranges, args.k)),
        ("nearest_link_count", kernels.nearest_link_count,
         kernels.nearest_link_count_py, (orig, noisy)),
        ("window_counts", kernels.window_counts,
         kernels.window_counts_py, (orig, noisy, 4.0)),
        ("combine_level_codes", kernels.combine_level_codes,
         kernels.combine_level_codes_py, (code_cols, levels, strides)),
        ("suppressed_below_k", kernels.suppressed_below_k,
         kernels.suppressed_below_k_py, (counts, args.k)),
    ]

    # the evaluation kernels are called once per equivalence class; a sweep
    # over many small classes is the shape that dominates real runs
    m = max(args.k, 2)
    n_classes = max(n // m, 1)
    class_pairs = []
    for _ in range(n_classes):
        o = rng.uniform(100, 200, size=m)
        class_pairs.append((o, o + rng.normal(0, 5, size=m)))

    def link_sweep(fn):
        def run(pairs):
            return sum(fn(o, x) for o, x in pairs)
        return run

    def window_sweep(fn):
        def run(pairs):
            return sum(int(fn(o, x, 4.0).sum()) for o, x in pairs)
        return run

    cases += [
        (f"link sweep ({n_classes}x{m})",
         link_sweep(kernels.nearest_link_count),
         link_sweep(kernels.nearest_link_count_py), (class_pairs,)),
        (f"window sweep ({n_classes}x{m})",
         window_sweep(kernels.window_counts),
         window_sweep(kernels.window_counts_py), (class_pairs,)),
    ]

    print(f"active lane: {kernels.BACKEND}   n={n}  k={args.k}")
    if kernels.BACKEND == "numpy":
        print("(KEANON_NUMBA=0 or numba unavailable: both columns run the "
              "same pure source)")
    header = f"{'kernel':<26}{'compile+1st':>12}{'jit':>10}{'numpy':>10}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, jit_fn, py_fn, case_args in cases:
        t0 = time.perf_counter()
        first = jit_fn(*case_args)
        compile_and_first = time.perf_counter() - t0
        jit_t, jit_res = timeit(jit_fn, case_args, args.repeats)
        py_t, py_res = timeit(py_fn, case_args, args.repeats)
        assert equal(jit_res, py_res), f"{name}: lanes disagree"
        assert equal(first, py_res), f"{name}: first call disagrees"
        speed = py_t / jit_t if jit_t > 0 else float("inf")
        print(f"{name:<26}{compile_and_first:>11.3f}s{jit_t * 1e3:>9.2f}ms"
              f"{py_t * 1e3:>9.2f}ms{speed:>8.1f}x")
    print("all kernels: lanes returned identical results")


if __name__ == "__main__":
    main()
