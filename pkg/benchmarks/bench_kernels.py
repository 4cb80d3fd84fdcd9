#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs every hot kernel on representative problem sizes, checks that the two
backends agree numerically, and prints a timing table.  The same comparison
drives the backend choice documented in the README: set SADDLENEWTON_NUMBA=0
to force the numpy path package-wide.

Usage: python benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from saddlenewton import _kernels as K


def timeit(fn, repeats):
    fn()  # warm up (and trigger JIT compilation)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_case(name, py_fn, nb_fn, agree_fn, repeats):
    t_py = timeit(py_fn, repeats)
    if nb_fn is None:
        print(f"{name:<28} numpy {t_py * 1e6:9.1f} us   numba       n/a")
        return
    t_nb = timeit(nb_fn, repeats)
    ok = agree_fn()
    speedup = t_py / t_nb if t_nb > 0 else float("inf")
    print(f"{name:<28} numpy {t_py * 1e6:9.1f} us   numba "
          f"{t_nb * 1e6:9.1f} us   x{speedup:5.1f}   agree={ok}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    have_numba = K._NUMBA_OK
    print(f"active backend: {K.kernel_backend()}"
          + ("" if have_numba else "  (numba unavailable or disabled)"))
    rng = np.random.default_rng(0)

    for d in (50, 200):
        v = rng.standard_normal(d)
        py = lambda: K._cubic_prox_py(v, 1.3, 0.02)
        nb = (lambda: K._cubic_prox_nb(v, 1.3, 0.02)) if have_numba else None
        agree = lambda: np.allclose(K._cubic_prox_py(v, 1.3, 0.02),
                                    K._cubic_prox_nb(v, 1.3, 0.02)) \
            if have_numba else True
        bench_case(f"cubic_prox dim={d}", py, nb, agree, args.repeats)

    for m, n in ((50, 50), (200, 200)):
        w = 3.0 * rng.standard_normal(m + n + 2)
        py = lambda: K._soc_project_pair_py(w, m, n)
        nb = (lambda: K._soc_project_pair_nb(w, m, n)) if have_numba else None
        agree = lambda: np.allclose(K._soc_project_pair_py(w, m, n),
                                    K._soc_project_pair_nb(w, m, n)) \
            if have_numba else True
        bench_case(f"soc_project m=n={m}", py, nb, agree, args.repeats)

    for m in (50, 200):
        d = 2 * m
        A = rng.standard_normal((d, d))
        H = np.ascontiguousarray(0.5 * (A + A.T))
        g = rng.standard_normal(d)

        def run_py():
            dz = np.zeros(d)
            acc = np.zeros(d)
            K._gmp_chunk_py(g, H, 0.01, 2.0, m, dz, acc, 25)

        def run_nb():
            dz = np.zeros(d)
            acc = np.zeros(d)
            K._gmp_chunk_nb(g, H, 0.01, 2.0, m, dz, acc, 25)

        def agree():
            dz1, s1 = np.zeros(d), np.zeros(d)
            dz2, s2 = np.zeros(d), np.zeros(d)
            K._gmp_chunk_py(g, H, 0.01, 2.0, m, dz1, s1, 25)
            K._gmp_chunk_nb(g, H, 0.01, 2.0, m, dz2, s2, 25)
            return np.allclose(dz1, dz2) and np.allclose(s1, s2)

        bench_case(f"gmp_chunk(25) m=n={m}", run_py,
                   run_nb if have_numba else None,
                   agree if have_numba else (lambda: True),
                   max(args.repeats // 5, 1))

    for m in (50, 200):
        d = 2 * m
        A = rng.standard_normal((d, d))
        H = np.ascontiguousarray(0.5 * (A + A.T))
        g = rng.standard_normal(d)
        p = rng.standard_normal(d + 2)
        py = lambda: K._cone_residual_py(g, H, 0.01, m, m, p)
        nb = (lambda: K._cone_residual_nb(g, H, 0.01, m, m, p)) \
            if have_numba else None
        agree = lambda: np.allclose(K._cone_residual_py(g, H, 0.01, m, m, p),
                                    K._cone_residual_nb(g, H, 0.01, m, m, p)) \
            if have_numba else True
        bench_case(f"cone_residual m=n={m}", py, nb, agree, args.repeats)

    for d in (52, 128, 402):
        A = np.ascontiguousarray(rng.standard_normal((d, d)) + d * np.eye(d))
        b = rng.standard_normal(d)
        py = lambda: K._lu_solve_py(A, b)
        nb = (lambda: K._lu_solve_nb(A, b)) if have_numba else None
        agree = lambda: np.allclose(K._lu_solve_py(A, b)[0],
                                    K._lu_solve_nb(A, b)[0]) \
            if have_numba else True
        bench_case(f"lu_solve dim={d}", py, nb, agree,
                   max(args.repeats // 10, 1))


if __name__ == "__main__":
    main()
