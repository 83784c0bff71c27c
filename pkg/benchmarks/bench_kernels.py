"""Benchmark the numba transfer-sweep kernels against the pure-numpy fallback.

Runs the batched 1D sweeps and the full operator apply at several problem
sizes, timing both backends in one process (the dispatched backend is
whatever the environment selected; both implementations are called
directly). Usage:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from rtkrylov import _kernels, presets
from rtkrylov.operator import apply_A


def best_of(fn, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sweeps():
    print("batched down-sweep, (n_rays, n_space) blocks")
    print(f"{'shape':>16} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    rng = np.random.default_rng(0)
    for n_rays, n_space in ((12, 200), (100, 200), (240, 1000), (500, 2000)):
        dtau = rng.uniform(0.01, 2.0, size=(n_rays, n_space - 1))
        src = rng.standard_normal((n_rays, n_space))
        out = np.empty_like(src)

        t_py = best_of(lambda: _kernels._sweep_down_py(dtau, src, out))
        if _kernels.HAVE_NUMBA:
            _kernels._sweep_down_nb(dtau, src, out)  # compile before timing
            t_nb = best_of(lambda: _kernels._sweep_down_nb(dtau, src, out))
            ratio = f"{t_py / t_nb:8.1f}x"
            nb_ms = f"{1e3 * t_nb:12.3f}"
        else:
            ratio, nb_ms = "      n/a", "         n/a"
        print(f"{f'{n_rays}x{n_space}':>16} {1e3 * t_py:12.3f} {nb_ms} {ratio}")


def bench_apply():
    print()
    print("full operator apply (monochromatic preset), backend:", _kernels.backend())
    print(f"{'N':>10} {'apply [ms]':>12}")
    for n_space, n_angles in ((200, 12), (1000, 12), (2000, 24)):
        problem = presets.monochromatic(n_space, n_angles)
        v = np.ones(problem.n_total)
        apply_A(problem, v)  # warm up
        t = best_of(lambda: apply_A(problem, v))
        print(f"{problem.n_total:>10} {1e3 * t:12.3f}")


if __name__ == "__main__":
    bench_sweeps()
    bench_apply()
