#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot phases of the split-operator step (potential factor in
position space, kinetic factor in momentum space) and one full step
including the FFT pair, for a range of batch sizes.  Run with

    python benchmarks/bench_kernels.py [--repeats 7]

The FFT cost is shared by both paths, so the full-step speedup is smaller
than the kernel-only speedup.
"""

import argparse
import time

import numpy as np
import scipy.fft

from pairwell.kernels import (
    HAVE_NUMBA,
    apply_kinetic_numba,
    apply_kinetic_numpy,
    apply_potential_numba,
    apply_potential_numpy,
)
from pairwell.units import free_energy, make_grid


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(M, N, repeats):
    grid = make_grid(80.0 * N / 512, N)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=(M, 2, N)) + 1j * rng.normal(size=(M, 2, N))
    E = free_energy(grid.p)
    dt = 0.05
    cos_e = np.cos(E * dt)
    sin_red = np.sin(E * dt) / E
    phase = np.exp(-1j * 0.3 * dt * np.cos(grid.x))
    cos_b = np.cos(0.1 * grid.x)
    sin_b = np.sin(0.1 * grid.x)

    rows = {}
    work = psi.copy()
    rows["potential numpy"] = timeit(
        lambda: apply_potential_numpy(work, phase, cos_b, sin_b), repeats)
    rows["kinetic numpy"] = timeit(
        lambda: apply_kinetic_numpy(work, cos_e, sin_red, grid.p), repeats)
    if HAVE_NUMBA:
        apply_potential_numba(work, phase, cos_b, sin_b)  # compile
        apply_kinetic_numba(work, cos_e, sin_red, grid.p)
        rows["potential numba"] = timeit(
            lambda: apply_potential_numba(work, phase, cos_b, sin_b), repeats)
        rows["kinetic numba"] = timeit(
            lambda: apply_kinetic_numba(work, cos_e, sin_red, grid.p), repeats)

    def full_step(pot, kin):
        pot(work, phase, cos_b, sin_b)
        wk = scipy.fft.fft(work, axis=-1)
        kin(wk, cos_e, sin_red, grid.p)
        work[...] = scipy.fft.ifft(wk, axis=-1)
        pot(work, phase, cos_b, sin_b)

    rows["full step numpy"] = timeit(
        lambda: full_step(apply_potential_numpy, apply_kinetic_numpy), repeats)
    if HAVE_NUMBA:
        rows["full step numba"] = timeit(
            lambda: full_step(apply_potential_numba, apply_kinetic_numba), repeats)
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    if not HAVE_NUMBA:
        print("numba not importable: benchmarking the numpy path only")
    print(f"{'case':>14} {'what':>18} {'best [ms]':>10} {'speedup':>8}")
    for M, N in [(32, 512), (128, 512), (32, 2048), (128, 2048), (32, 8192)]:
        rows = bench_case(M, N, args.repeats)
        for what, t in rows.items():
            speed = ""
            if what.endswith("numba"):
                ref = rows[what.replace("numba", "numpy")]
                speed = f"{ref / t:5.2f}x"
            print(f"{M:>5} x 2 x {N:<6} {what:>18} {1e3 * t:>10.3f} {speed:>8}")
        print()


if __name__ == "__main__":
    main()
