#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from rectree.kernels import _numpy as numpy_backend

try:
    from rectree.kernels import _core as compiled_backend
except ImportError:
    compiled_backend = None


def best_of(repeat, fn, *args):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n, rng):
    for dim, depth in ((1, 20), (3, 12)):
        pts = rng.random((n, dim))
        yield f"morton_encode  dim={dim} depth={depth:2d}", "morton_encode", (pts, depth)
    for dim in (2, 8):
        pts = rng.random((n, dim))
        codes = numpy_backend.morton_encode(pts, 6)
        order = np.argsort(codes)
        sorted_pts = np.ascontiguousarray(pts[order])
        starts = np.concatenate([[0], np.flatnonzero(np.diff(codes[order])) + 1])
        yield f"group_moments  dim={dim} groups={len(starts)}", "group_moments", (
            sorted_pts,
            starts,
        )
    for k in (16, 128):
        pts = rng.random((n // 4, 3))
        centers = rng.random((k, 3))
        yield f"nearest_centers k={k}", "nearest_centers", (pts, centers)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"n = {args.n}, best of {args.repeat}")
    header = f"{'kernel':38s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for label, name, call_args in cases(args.n, rng):
        t_py = best_of(args.repeat, getattr(numpy_backend, name), *call_args)
        if compiled_backend is None:
            print(f"{label:38s} {t_py * 1e3:9.2f}ms {'n/a':>10s} {'':>8s}")
            continue
        t_c = best_of(args.repeat, getattr(compiled_backend, name), *call_args)
        print(f"{label:38s} {t_py * 1e3:9.2f}ms {t_c * 1e3:9.2f}ms {t_py / t_c:7.2f}x")
    if compiled_backend is None:
        print("compiled backend not built; showing numpy fallback only")


if __name__ == "__main__":
    main()
