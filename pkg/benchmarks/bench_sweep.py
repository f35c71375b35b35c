"""Compare the compiled and pure-numpy kernels.

Usage::

    python benchmarks/bench_sweep.py [--repeat 5]

Times ``forward_sweep`` (the Volterra march behind every determinant) for a
few grid sizes and block shapes, ``subset_terms`` (the closed-form subset
sums) for a few symbol sizes, and one end-to-end determinant.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from semisep import _backend
from semisep.determinants import fredholm_det2
from semisep.kernelcore import Grid
from semisep.wienerhopf import RationalSymbolKernel, build_kernel


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def sweep_case(N, m, n, rng):
    c = lambda *s: rng.normal(size=s) + 1j * rng.normal(size=s)
    return c(N, m, n), c(N, n, m), c(N, m, n), np.full(N - 1, 1.0 / N)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _backend.compiled_available():
        raise SystemExit("compiled backend not built; install with 'pip install -e . --no-build-isolation'")

    rng = np.random.default_rng(0)
    rows = []
    for N, m, n in [(500, 1, 2), (2000, 1, 2), (8000, 1, 2), (2000, 2, 4), (2000, 4, 8)]:
        C, B, F, dx = sweep_case(N, m, n, rng)
        t = {b: best_of(lambda b=b: _backend.forward_sweep(C, B, F, dx, 0.7, backend=b), args.repeat)
             for b in ("python", "compiled")}
        rows.append((f"forward_sweep N={N} m={m} n={n}", t["python"], t["compiled"]))

    for N in (12, 16, 20):
        a = rng.normal(size=N) + 1j * rng.normal(size=N)
        b = rng.normal(size=N) + 1j * rng.normal(size=N)
        P = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
        rep = max(1, args.repeat // 2)
        t = {bk: best_of(lambda bk=bk: _backend.subset_terms(a, b, P, N // 2, backend=bk), rep)
             for bk in ("python", "compiled")}
        rows.append((f"subset_terms N={N} size={N // 2}", t["python"], t["compiled"]))

    k = RationalSymbolKernel([1, 0.5], [1, 2], [1, 0.3], [1.5, 0.7], 2.0)
    kern, grid = build_kernel(k), Grid.trapezoid(0.0, 2.0, 4000)
    kern.sample(grid)
    times = {}
    for bk in ("python", "compiled"):
        prev = _backend.BACKEND
        _backend.BACKEND = bk
        try:
            times[bk] = best_of(lambda: fredholm_det2(kern, 1.0, grid), args.repeat)
        finally:
            _backend.BACKEND = prev
    rows.append(("fredholm_det2 L=2 M=2 n=4000", times["python"], times["compiled"]))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'python [ms]':>12}  {'compiled [ms]':>14}  {'speedup':>8}")
    for name, tp, tc in rows:
        print(f"{name:<{width}}  {tp * 1e3:12.2f}  {tc * 1e3:14.2f}  {tp / tc:8.1f}")
    print(f"(best of {args.repeat}; median speedup {statistics.median(r[1] / r[2] for r in rows):.1f}x)")


if __name__ == "__main__":
    main()
