"""Timing comparison of the compiled and pure-numpy coordinate descent kernels.

Run directly: ``python benchmarks/bench_backends.py``. The backend is chosen
at import time via TRIMREG_BACKEND, so both variants are loaded here by
importing the kernel modules explicitly.
"""

import time

import numpy as np

from trimreg import _kernels_numpy


def _problem(n, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[: max(p // 10, 1)] = 2.0
    y = X @ beta + rng.standard_normal(n)
    return X, y


def bench_lasso(kern, n=2000, p=100, reps=5, seed=0):
    X, y = _problem(n, p, seed)
    row_w = np.ones(n)
    l1_w = np.full(p, 0.1 * n)
    beta0 = np.zeros(p)
    kern.cd_weighted_lasso(X, y, row_w, l1_w, beta0, 1e-8, 5000)  # warm-up / jit
    t0 = time.perf_counter()
    for _ in range(reps):
        kern.cd_weighted_lasso(X, y, row_w, l1_w, np.zeros(p), 1e-8, 5000)
    return (time.perf_counter() - t0) / reps


def bench_gamma(kern, n=2000, k=20, reps=5, seed=1):
    X, y = _problem(n, k, seed)
    Q, _ = np.linalg.qr(X)
    p_diag = np.clip(1.0 - np.sum(Q**2, axis=1), 0.0, 1.0)
    inv_mg = np.full(n, 1.0 / np.log(n))
    pen = np.full(n, 0.5)
    free = np.ones(n, dtype=np.bool_)
    kern.cd_gamma(y, Q, p_diag, inv_mg, pen, free, np.zeros(n), 1e-9, 10000)
    t0 = time.perf_counter()
    for _ in range(reps):
        kern.cd_gamma(y, Q, p_diag, inv_mg, pen, free, np.zeros(n), 1e-9, 10000)
    return (time.perf_counter() - t0) / reps


def main():
    kernels = {"numpy": _kernels_numpy}
    try:
        from trimreg import _kernels_numba

        kernels["numba"] = _kernels_numba
    except ImportError:
        print("numba unavailable, timing the numpy backend only")

    print(f"{'kernel':<24}{'backend':<10}{'sec/call':>12}")
    for bench in (bench_lasso, bench_gamma):
        base = None
        for name, kern in kernels.items():
            t = bench(kern)
            note = ""
            if name == "numpy":
                base = t
            elif base:
                note = f"  ({base / t:.1f}x vs numpy)"
            print(f"{bench.__name__:<24}{name:<10}{t:>12.5f}{note}")


if __name__ == "__main__":
    main()
