#!/usr/bin/env python3
"""Benchmark the compiled convolution backend against the numpy fallback.

Runs the two shared-contract kernels (separable Gaussian filtering and
sparse-tap 2-D correlation) on snow-synthesis-sized fields, then reports
end-to-end synthesize_snow throughput with whichever backend is active.

Usage: python bench/benchmark_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from snowaug.core import item_rng
from snowaug.kernels import BACKEND, conv2d_reflect, sepconv2d_reflect
from snowaug.snow import SnowConfig, build_gaussian_kernel, build_motion_blur_kernel, synthesize_snow

FIELD_SHAPE = (360, 640)  # default working size, (height, width)


def timeit(fn, repeat):
    fn()  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backends(repeat):
    backends = ["numpy"]
    if BACKEND == "cython":
        backends.append("cython")
    rng = np.random.default_rng(0)
    field = rng.normal(0.5, 0.3, FIELD_SHAPE)
    mask = (field > 1.0).astype(np.float64)

    print(f"field {FIELD_SHAPE[1]}x{FIELD_SHAPE[0]}, best of {repeat} runs\n")
    header = f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)

    cases = []
    for sigma in (0.5, 1.0, 2.0, 4.0):
        taps = build_gaussian_kernel(sigma).taps
        cases.append((f"gaussian sep sigma={sigma}", "sep", taps))
    for length, angle in ((5, 30.0), (11, 120.0)):
        mb = build_motion_blur_kernel(length, angle)
        cases.append((f"motion blur len={length}", "corr", mb.weights))

    for name, kind, kernel in cases:
        times = []
        for b in backends:
            if kind == "sep":
                fn = lambda: sepconv2d_reflect(field, kernel, backend=b)
            else:
                fn = lambda: conv2d_reflect(mask, kernel, backend=b)
            times.append(timeit(fn, repeat))
        row = f"{name:<28}" + "".join(f"{t * 1000:>10.3f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)


def bench_synthesis(repeat):
    rng = np.random.default_rng(1)
    image = rng.integers(0, 256, (720, 1280, 3), dtype=np.uint8)
    cfg = SnowConfig()

    def run():
        for i in range(5):
            synthesize_snow(image, cfg, item_rng(0, i))

    best = timeit(run, repeat) / 5
    print(f"\nsynthesize_snow 1280x720 -> working 640x360 ({BACKEND} backend): "
          f"{best * 1000:.1f} ms/image, {1 / best:.1f} images/s")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions per case (best is kept)")
    args = parser.parse_args()
    print(f"active backend: {BACKEND}")
    bench_backends(args.repeat)
    bench_synthesis(args.repeat)


if __name__ == "__main__":
    main()
