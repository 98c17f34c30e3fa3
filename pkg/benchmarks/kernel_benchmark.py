#!/usr/bin/env python3
"""Benchmark the compiled projection kernels against the numpy fallback.

Times one full projection sweep (all angles) per kernel and size, on both
implementations, and prints the speedup.  Run from a built checkout:

    python benchmarks/kernel_benchmark.py [--sizes 64,128,256] [--angles 90]
"""

import argparse
import time

import numpy as np

from radonlens import _projkern_py as numpy_impl

try:
    from radonlens import _projkern as compiled_impl
except ImportError:
    compiled_impl = None


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(size, n_angles):
    rng = np.random.default_rng(0)
    img = np.ascontiguousarray(rng.uniform(0, 1, (size, size)))
    n_det = int(np.ceil(size * np.sqrt(2))) + 2
    angles = np.deg2rad(np.arange(n_angles) * 180.0 / n_angles)
    cos_t, sin_t = np.cos(angles), np.sin(angles)
    row = rng.uniform(0, 1, n_det)

    def forward(impl):
        out = np.zeros(n_det)
        for a in range(n_angles):
            impl.joseph_forward(img, cos_t[a], sin_t[a], n_det, 1.0, out)

    def adjoint(impl):
        out = np.zeros((size, size))
        for a in range(n_angles):
            impl.joseph_adjoint(row, cos_t[a], sin_t[a], size, size, 1.0, out)

    def backproject(impl):
        out = np.zeros((size, size))
        for a in range(n_angles):
            impl.backproject_linear(row, cos_t[a], sin_t[a], size, size, 1.0, out)

    def rotate(impl):
        out = np.zeros((n_det, n_det))
        c, s = cos_t[n_angles // 3], sin_t[n_angles // 3]
        for _ in range(n_angles):
            impl.splat_bspline3(img, c, s, 4.0, -s, c, 30.0, out, 1.0)

    rows = []
    for name, fn in (("forward", forward), ("adjoint", adjoint),
                     ("backproject", backproject), ("bspline-splat", rotate)):
        t_np = _time(lambda: fn(numpy_impl))
        if compiled_impl is None:
            rows.append((name, t_np, None))
        else:
            t_c = _time(lambda: fn(compiled_impl))
            rows.append((name, t_np, t_c))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="64,128,256")
    parser.add_argument("--angles", type=int, default=90)
    args = parser.parse_args()

    if compiled_impl is None:
        print("compiled extension not available; timing the numpy fallback only\n")
    header = f"{'size':>5} {'kernel':>14} {'numpy':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for size in (int(s) for s in args.sizes.split(",")):
        for name, t_np, t_c in bench_kernels(size, args.angles):
            if t_c is None:
                print(f"{size:>5} {name:>14} {t_np * 1e3:>8.1f}ms {'-':>10} {'-':>8}")
            else:
                print(f"{size:>5} {name:>14} {t_np * 1e3:>8.1f}ms "
                      f"{t_c * 1e3:>8.1f}ms {t_np / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
