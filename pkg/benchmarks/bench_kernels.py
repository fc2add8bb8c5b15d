"""Compiled MPFR kernel against the gmpy2 fallback.

Times a full ``lambda_exact``-sized kernel call (table build plus the row
combination with gradient) at several node counts, and checks that both
backends return bit-identical results.

    python benchmarks/bench_kernels.py [--sizes 8 16 30 64] [--repeat 3]
"""

import argparse
import time

import numpy as np

from singcov import _kernels
from singcov.exact.engine import _kernel_terms, hook_terms
from singcov.exact.logpoly import LogPoly


def workload(n):
    rng = np.random.default_rng(n)
    nodes = np.sort(rng.uniform(0.1, 10.0, n))[::-1]
    _, terms = _kernel_terms(n, hook_terms(n, n // 2, LogPoly.log()))
    return nodes, terms, 128 + 2 * n + 256


def best_time(backend, nodes, terms, prec, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = backend.NodeTable(nodes, prec).combine(terms, gradient=True)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 30, 64])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if _kernels.compiled_backend is None:
        raise SystemExit("compiled backend is not built; reinstall with Cython and MPFR available")

    print(f"{'N':>4} {'terms':>6} {'bits':>6} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}  identical")
    for n in args.sizes:
        nodes, terms, prec = workload(n)
        t_py, r_py = best_time(_kernels.python_backend, nodes, terms, prec, args.repeat)
        t_c, r_c = best_time(_kernels.compiled_backend, nodes, terms, prec, args.repeat)
        same = r_py[0] == r_c[0] and np.array_equal(r_py[1], r_c[1])
        print(f"{n:>4} {len(terms):>6} {prec:>6} {1e3 * t_py:>10.1f} {1e3 * t_c:>12.1f} {t_py / t_c:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
