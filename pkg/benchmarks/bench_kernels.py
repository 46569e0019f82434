"""Compiled versus numpy kernels on the default geometry.

Usage: python3 benchmarks/bench_kernels.py [--h 0.25] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from nmmb import kernels, tridiag
from nmmb.potential import PotentialSpec, assemble_fem


def cases(fem, n_shifts, n_vectors, ql_dim):
    kd, ko, md, mo = fem.k_diag, fem.k_off, fem.m_diag, fem.m_off
    lo, hi = 0.0, 0.2
    shifts = np.ascontiguousarray(np.linspace(lo, hi, n_shifts))
    pivmin = tridiag._pivmin(ko)
    energies = np.ascontiguousarray(
        tridiag.bisect(kd, ko, md, mo, np.arange(n_vectors), lo, hi))
    X0 = np.random.default_rng(0).standard_normal((n_vectors, fem.n))
    tiny = tridiag.EPS * float(np.max(md))
    rng = np.random.default_rng(1)
    d = np.ascontiguousarray(rng.standard_normal(ql_dim))
    e = np.ascontiguousarray(rng.standard_normal(ql_dim - 1))

    def sturm(impl):
        return lambda: impl.sturm_counts(kd, ko, md, mo, shifts, pivmin)

    def invit(impl):
        return lambda: impl.inverse_iteration(kd, ko, md, mo, energies, X0.copy(), 2, tiny)

    def ql(impl):
        return lambda: impl.tridiagonal_eigenvalues(d, e)

    return {
        f"sturm_counts ({n_shifts} shifts, n = {fem.n})": sturm,
        f"inverse_iteration ({n_vectors} vectors, 2 sweeps)": invit,
        f"tridiagonal_eigenvalues (dim {ql_dim})": ql,
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--h", type=float, default=0.25)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    fem = assemble_fem(PotentialSpec(), args.h)
    table = cases(fem, n_shifts=32, n_vectors=16, ql_dim=64)
    names = sorted(kernels.BACKENDS)
    if "cython" not in names:
        print("compiled kernels unavailable; timing the numpy fallback only")
    print(f"{'kernel':50s}" + "".join(f"{n:>12s}" for n in names) + f"{'speedup':>10s}")
    for label, make in table.items():
        best = {}
        for name in names:
            fn = make(kernels.BACKENDS[name])
            best[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        speed = best["python"] / best["cython"] if "cython" in best else float("nan")
        print(f"{label:50s}" + "".join(f"{best[n] * 1e3:10.2f}ms" for n in names)
              + f"{speed:9.1f}x")


if __name__ == "__main__":
    main()
