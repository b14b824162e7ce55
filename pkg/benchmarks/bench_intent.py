#!/usr/bin/env python3
"""Benchmark the intent-evidence kernel: numba @njit vs pure numpy.

The kernel runs once per control tick over every remaining task, so this is
the package's hot loop. Run directly:

    python3 benchmarks/bench_intent.py
"""

import time

import numpy as np

from jointplan import kernels

SIZES = (10, 100, 1_000, 10_000, 100_000)
REPS = {10: 20000, 100: 20000, 1_000: 5000, 10_000: 500, 100_000: 50}


def bench(fn, task_xy, reps):
    fn(0.0, 0.0, 1.0, 0.3, task_xy, 0.3, 1.0, 0.05)  # warmup / JIT
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn(0.0, 0.0, 1.0, 0.3, task_xy, 0.3, 1.0, 0.05)
        best = min(best, (time.perf_counter() - t0) / reps)
    return best


def main():
    rng = np.random.default_rng(0)
    paths = [("numpy", kernels.evidence_scores_numpy)]
    if kernels.evidence_scores_numba is not None:
        paths.append(("numba", kernels.evidence_scores_numba))
    else:
        print("numba unavailable; benchmarking the numpy path only")

    header = f"{'tasks':>8}" + "".join(f"{name + ' (µs)':>14}" for name, _ in paths)
    if len(paths) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for k in SIZES:
        task_xy = rng.uniform(-50, 50, (k, 2))
        row = [f"{k:>8}"]
        times = []
        for _, fn in paths:
            t = bench(fn, task_xy, REPS[k])
            times.append(t)
            row.append(f"{t * 1e6:>14.2f}")
        if len(times) == 2:
            row.append(f"{times[0] / times[1]:>9.1f}x")
        print("".join(row))
    print(f"\nactive path for jointplan.intent: {kernels.ACTIVE_PATH} "
          f"(set JOINTPLAN_PURE_NUMPY=1 to force numpy)")


if __name__ == "__main__":
    main()
