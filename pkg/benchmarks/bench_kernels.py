"""Compiled vs numpy kernels: one training epoch and one dense eigensolve.

Run with ``python3 benchmarks/bench_kernels.py``. Prints median wall times
per call and the speedup of the compiled backend.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from nqdt import kernels
from nqdt.ansatz import init_ansatz
from nqdt.hamiltonian import AnnealCoefficients, build_operator, random_instance


def _median_time(fn, repeat: int) -> float:
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return float(np.median(timeit.repeat(fn, number=number, repeat=repeat))) / number


def bench_epoch(backend, n: int, hidden: int, repeat: int) -> float:
    H = build_operator(random_instance(n, 0), AnnealCoefficients.parametric(), 0.5)
    diag, tw, r1d, r1s = H.kernel_args()
    a = init_ansatz(n, hidden, 0)
    grad = np.empty(a.n_params)
    sq = np.zeros(a.n_params)
    lams, pstates = np.empty(0), np.empty((0, H.dim))
    theta = a.theta.copy()

    def step():
        backend.value_and_grad(theta, n, hidden, diag, tw, r1d, r1s, lams, pstates, grad)
        backend.rmsprop_step(theta, grad, sq, 1e-6, 0.9, 1e-8)

    return _median_time(step, repeat)


def bench_eigh(backend, size: int, repeat: int) -> float:
    rng = np.random.default_rng(1)
    M = rng.standard_normal((size, size))
    M = M + M.T

    def solve():
        V = M.copy()
        d, e = backend.tred2(V)
        backend.tql2(d, e, V)

    return _median_time(solve, repeat)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if kernels.compiled is None:
        print("compiled extension not built; only the numpy backend is available")
    backends = [("numpy", kernels.python)] + ([("cython", kernels.compiled)] if kernels.compiled else [])

    rows = []
    for n in (4, 6, 8, 10):
        label = f"epoch n={n} hidden=64"
        rows.append((label, {name: bench_epoch(b, n, 64, args.repeat) for name, b in backends}))
    for size in (64, 256):
        label = f"tred2+tql2 {size}x{size}"
        rows.append((label, {name: bench_eigh(b, size, args.repeat) for name, b in backends}))

    print(f"{'kernel':<26}" + "".join(f"{name + ' (ms)':>14}" for name, _ in backends) + f"{'speedup':>10}")
    for label, times in rows:
        line = f"{label:<26}" + "".join(f"{1e3 * times[name]:>14.3f}" for name, _ in backends)
        if "cython" in times:
            line += f"{times['numpy'] / times['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
