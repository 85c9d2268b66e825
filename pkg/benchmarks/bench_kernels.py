#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Workloads mirror the package's hot paths: bootstrap resampling of ranking
metrics, repeated logistic fits (cross-validation and the ablation ladder),
curvature grids and scalar gradient descent. Run:

    python benchmarks/bench_kernels.py [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from eclipse import _kernels_numpy as np_impl

try:
    from eclipse import _kernels_numba as nb_impl
except ImportError:
    nb_impl = None


def time_best(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def make_workloads(rng: np.random.Generator):
    n = 200
    scores = rng.normal(size=n)
    labels = np.array([0, 1] * (n // 2), dtype=np.int64)
    resample_idx = rng.integers(0, n, size=(1000, n)).astype(np.int64)

    X = rng.normal(size=(160, 7))
    y = (X[:, 0] + rng.normal(scale=0.7, size=160) > 0).astype(np.float64)
    sw = np.ones(160)

    grid = np.linspace(-5.0, 7.0, 1_000_000)

    return [
        (
            "rank_auc x1000 (n=200)",
            lambda impl: [impl.rank_auc(scores, labels) for _ in range(1000)],
        ),
        (
            "bootstrap AUC (1000 x 200)",
            lambda impl: impl.metric_over_resamples(scores, labels, resample_idx, 0),
        ),
        (
            "bootstrap AP (1000 x 200)",
            lambda impl: impl.metric_over_resamples(scores, labels, resample_idx, 1),
        ),
        (
            "logistic fit x50 (160 x 7)",
            lambda impl: [
                impl.fit_logistic(X, y, sw, 1.0, 1000, 1e-6) for _ in range(50)
            ],
        ),
        (
            "curvature grid (1e6 points)",
            lambda impl: impl.second_derivative_grid(grid, 1.0, 1.0, 2.0, 1.0, 0.0),
        ),
        (
            "scalar GD x200 (1e4 iters cap)",
            lambda impl: [
                impl.minimize_scalar_gd(-4.0, 1.0, 1.0, 2.0, 1.0, 0.0, 0.33, 10_000, 1e-12)
                for _ in range(200)
            ],
        ),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats, best-of")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    workloads = make_workloads(rng)

    if nb_impl is not None:
        print("warming numba kernels (JIT compile, cached on disk) ...")
        for _, fn in workloads:
            fn(nb_impl)

    header = f"{'workload':<32} {'numpy':>10} {'numba':>10} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, fn in workloads:
        t_np = time_best(lambda: fn(np_impl), args.repeats)
        if nb_impl is None:
            print(f"{name:<32} {t_np * 1e3:>8.1f}ms {'n/a':>10} {'n/a':>9}")
            continue
        t_nb = time_best(lambda: fn(nb_impl), args.repeats)
        print(
            f"{name:<32} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms {t_np / t_nb:>8.1f}x"
        )


if __name__ == "__main__":
    main()
