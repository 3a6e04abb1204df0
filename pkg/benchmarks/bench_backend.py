"""Timing comparison of the numpy and numba kernel tables.

Runs each hot kernel on desk-scale inputs under both backends (independently
of CGBOUND_BACKEND, which only picks the default dispatch) and prints the
per-call times and speedup. Usage:

    python benchmarks/bench_backend.py [--repeats 20000] [--n 12] [--m 6]
"""

import argparse
import time

import numpy as np

from cgbound.backend import numba_kernels, numpy_kernels


def _workload(n, m, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    z = rng.uniform(0.1, 2.0, size=n)
    u = rng.standard_normal(n)
    y = rng.standard_normal(m)
    G = rng.standard_normal((n, n))
    P = G @ G.T + np.eye(n)
    P_inv = np.linalg.inv(P)
    B = 0.3 * (G + G.T)
    return {
        "mrelu": (z, 0.0, 1.5),
        "ball_project": (u, 1.0),
        "tikhonov_primal": (A, z, y, P_inv),
        "tikhonov_woodbury": (A, z, y, P),
        "datafit_grad": (A, u, z, y),
        "cgnet_step": (z, u, y, A, B, 0.5, 1.0, 20.0, 1.0),
        "drcgnet_vstep": (z, u, y, A, 0.5, 1.0),
    }


def _time_kernel(fn, args, repeats):
    fn(*args)  # warm up (compiles the jitted variant)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20000)
    parser.add_argument("--n", type=int, default=12)
    parser.add_argument("--m", type=int, default=6)
    args = parser.parse_args()

    work = _workload(args.n, args.m)
    print(f"{'kernel':<20} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, call_args in work.items():
        t_np = _time_kernel(numpy_kernels[name], call_args, args.repeats)
        if numba_kernels is None:
            print(f"{name:<20} {t_np * 1e6:>10.2f}us {'-':>12} {'-':>9}")
            continue
        t_nb = _time_kernel(numba_kernels[name], call_args, args.repeats)
        out_np = np.asarray(numpy_kernels[name](*call_args))
        out_nb = np.asarray(numba_kernels[name](*call_args))
        agree = np.allclose(out_np, out_nb, rtol=1e-12, atol=1e-12)
        flag = "" if agree else "  (MISMATCH)"
        print(
            f"{name:<20} {t_np * 1e6:>10.2f}us {t_nb * 1e6:>10.2f}us "
            f"{t_np / t_nb:>8.2f}x{flag}"
        )


if __name__ == "__main__":
    main()
