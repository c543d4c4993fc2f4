"""Compare the compiled and NumPy Bartlett kernels on the full angle grid.

Usage: python3 benchmarks/bench_bartlett.py [--samples N] [--step DEG] [--repeat R]
"""

import argparse
import platform
import time

import numpy as np

from wsrsim import estimator
from wsrsim.estimator import AngleGrid, get_kernel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1001)
    ap.add_argument("--step", type=float, default=1.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    t = np.linspace(0, 2 * np.pi, args.samples)
    wl = 299792458.0 / 5.54e9
    disp = np.column_stack([0.3 * np.sin(t), 0.3 * (1 - np.cos(t)), np.zeros_like(t)]) / wl
    h2 = np.exp(2j * np.pi * rng.random(args.samples))
    grid = AngleGrid(args.step, args.step)
    dirs = grid.directions()

    print(f"grid {grid.shape[0]}x{grid.shape[1]} = {len(dirs)} cells, {args.samples} samples, "
          f"python {platform.python_version()}, numpy {np.__version__}")
    results = {}
    for name in sorted(estimator._KERNELS):
        secs, out = best_of(lambda: get_kernel(name)(h2, disp, dirs, 2), args.repeat)
        results[name] = out
        print(f"{name:>7}: {secs:8.3f} s  ({len(dirs) * args.samples / secs / 1e6:7.1f} M terms/s)")
    if len(results) == 2:
        a, b = results["cython"], results["numpy"]
        print(f"max relative difference {np.max(np.abs(a - b) / np.abs(b).max()):.2e}")
    else:
        print("compiled kernel not built; only the NumPy fallback was timed")


if __name__ == "__main__":
    main()
