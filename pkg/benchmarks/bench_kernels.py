"""Compare the compiled extension kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the three hot kernels (both chaotic-system integrators and the batched
permutation skill statistic) on representative workloads and verifies that
the two backends agree bit-for-bit before reporting speedups.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from chaoscast import _pykernels, backend


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repeats, best-of reported (default 5)")
    args = parser.parse_args()

    if backend.BACKEND != "compiled":
        print("compiled backend unavailable; nothing to compare "
              f"(active backend: {backend.BACKEND})")
        return

    s63 = np.array([1.0, 1.0, 1.0])
    s96 = 8.0 + 0.01 * np.arange(16)
    rng = np.random.default_rng(0)
    Ms = (rng.random((2000, 40, 8)) < 0.4).astype(np.uint8)

    cases = [
        (
            "lorenz63_trajectory (100k steps)",
            lambda: backend.lorenz63_trajectory(s63, 10.0, 28.0, 8 / 3, 0.01, 100_000),
            lambda: _pykernels.lorenz63_trajectory(s63, 10.0, 28.0, 8 / 3, 0.01, 100_000),
        ),
        (
            "lorenz96_trajectory (dim 16, 50k steps)",
            lambda: backend.lorenz96_trajectory(s96, 8.0, 0.05, 50_000),
            lambda: _pykernels.lorenz96_trajectory(s96, 8.0, 0.05, 50_000),
        ),
        (
            "skill_statistic_batch (2000 x 40x8, top 4)",
            lambda: backend.skill_statistic_batch(Ms, 4),
            lambda: _pykernels.skill_statistic_batch(Ms, 4),
        ),
    ]

    print(f"{'kernel':45s} {'compiled':>10s} {'pure':>10s} {'speedup':>8s}")
    for name, compiled, pure in cases:
        tc, out_c = _time(compiled, args.repeat)
        tp, out_p = _time(pure, args.repeat)
        if isinstance(out_c, tuple):
            agree = all(np.array_equal(a, b) for a, b in zip(out_c, out_p))
        else:
            agree = np.array_equal(out_c, out_p)
        flag = "" if agree else "  ** OUTPUTS DIFFER **"
        print(f"{name:45s} {tc * 1e3:9.1f}ms {tp * 1e3:9.1f}ms "
              f"{tp / tc:7.1f}x{flag}")


if __name__ == "__main__":
    main()
