#!/usr/bin/env python3
"""Benchmark the numba-compiled hot kernels against the pure-numpy fallbacks.

The two kernels that dominate experiment runtime are measurement sampling
(state rotation + Born draw per snapshot) and the shadow-kernel Gram matrix
(T^2 snapshot pairs per entry).  Both carry an @njit implementation and a
vectorized numpy fallback selected by SHADOWKIT_NO_NUMBA=1; this script times
them side by side in one process and checks they agree.

Usage: python benchmarks/bench_accel.py [--qubits N] [--snapshots T] [--gram-size N]
"""

import argparse
import time

import numpy as np

from shadowkit import accel


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_sampler(n, num_snapshots):
    rng = np.random.default_rng(0)
    amps = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    amps /= np.linalg.norm(amps)
    amps = np.ascontiguousarray(amps)
    bases, unif = accel.snapshot_randomness(1, num_snapshots, n)

    out_np = np.zeros((n, num_snapshots), dtype=np.uint8)
    t_np = timeit(lambda: accel._sample_core_numpy(amps, bases, unif, out_np))
    rows = [("sampler", "numpy", t_np)]
    if accel.USING_NUMBA:
        out_nb = np.zeros((n, num_snapshots), dtype=np.uint8)
        accel._sample_core(amps, bases, unif, out_nb)  # compile
        t_nb = timeit(lambda: accel._sample_core(amps, bases, unif, out_nb))
        rows.append(("sampler", "numba", t_nb))
        assert np.array_equal(out_np, out_nb), "sampler paths disagree"
    return rows


def bench_gram(num_shadows, n, num_snapshots):
    rng = np.random.default_rng(1)
    codes = rng.integers(0, 6, size=(num_shadows, num_snapshots, n)).astype(np.uint8)
    table = accel.trace_exp_table(n, 1.0)
    pairs = np.array(
        [(i, j) for i in range(num_shadows) for j in range(i, num_shadows)],
        dtype=np.int64,
    )

    def run_numpy():
        out = np.zeros(len(pairs))
        for p, (i, j) in enumerate(pairs):
            out[p] = accel._pair_exp_sum_numpy(codes[i], codes[j], table, i == j)
        return out

    t_np = timeit(run_numpy)
    rows = [("shadow gram", "numpy", t_np)]
    if accel.USING_NUMBA:
        out = np.zeros(len(pairs))
        accel._gram_core(codes, table, pairs, out)  # compile
        t_nb = timeit(lambda: accel._gram_core(codes, table, pairs, out))
        rows.append(("shadow gram", "numba", t_nb))
        ref = run_numpy()
        assert np.allclose(out, ref, rtol=1e-12), "gram paths disagree"
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, default=10)
    parser.add_argument("--snapshots", type=int, default=20000)
    parser.add_argument("--gram-size", type=int, default=12)
    parser.add_argument("--gram-snapshots", type=int, default=300)
    args = parser.parse_args()

    print(f"numba available: {accel.USING_NUMBA}")
    rows = []
    rows += bench_sampler(args.qubits, args.snapshots)
    rows += bench_gram(args.gram_size, args.qubits, args.gram_snapshots)

    print(f"\n{'kernel':<14} {'path':<7} {'seconds':>10}")
    baselines = {}
    for kernel, path, seconds in rows:
        speedup = ""
        if path == "numpy":
            baselines[kernel] = seconds
        else:
            speedup = f"  ({baselines[kernel] / seconds:.1f}x faster)"
        print(f"{kernel:<14} {path:<7} {seconds:>10.4f}{speedup}")


if __name__ == "__main__":
    main()
