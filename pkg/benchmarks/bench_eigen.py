#!/usr/bin/env python3
"""Benchmark the Sturm-bisection kernels: jitted vs pure-numpy backend.

Times a single Sturm count, a batched 8-shift count, and a full
20-eigenvalue window solve on transitional blocks of growing dimension.

    python benchmarks/bench_eigen.py --dims 20001,200001,500001
"""

import argparse
import time

import numpy as np

from esqpt_lab import backend, eigen, models
from esqpt_lab.models import ModelSpec


def time_call(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_dim(dim, backends):
    n = 2 * (dim - 1)
    op = models.build_transitional_hamiltonian(ModelSpec.vibron(n, 0, 0.5))
    assert op.dim == dim
    i0 = None
    rows = []
    for name in backends:
        backend.set_backend(name)
        eigen.sturm_count(op, 0.0)  # warm up (jit compile on first call)
        t_count = time_call(lambda: eigen.sturm_count(op, 0.0))
        shifts = np.linspace(-0.2, 0.4, 8)
        kern = backend.get_kernels()
        off2 = op.offdiag * op.offdiag
        t_batch = time_call(lambda: kern.sturm_counts(op.diag, off2, shifts,
                                                      1e-20))
        i0 = eigen.sturm_count(op, 0.0)
        t_window = time_call(
            lambda: eigen.eig_indices(op, i0 - 10, i0 + 9), repeat=1)
        rows.append((name, t_count, t_batch, t_window))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="20001,200001",
                    help="comma list of block dimensions")
    ap.add_argument("--backends", default="numba,numpy")
    args = ap.parse_args()
    dims = [int(d) for d in args.dims.split(",")]
    backends = args.backends.split(",")
    print(f"{'dim':>8} {'backend':>8} {'count':>10} {'batch8':>10} "
          f"{'20 eigs':>10}")
    for dim in dims:
        for name, t1, t2, t3 in bench_dim(dim, backends):
            print(f"{dim:>8} {name:>8} {t1 * 1e3:>9.2f}ms {t2 * 1e3:>9.2f}ms "
                  f"{t3:>9.2f}s ")
    backend.set_backend(backends[0])


if __name__ == "__main__":
    main()
