"""Time the compiled and pure-Python multiplier kernels.

Usage: ``python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]``
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from viscolab import kernels
from viscolab.params import make_params
from viscolab.symbol import ExpFunction, branch_coefficients


def bench(n: int, repeat: int) -> dict:
    rng = np.random.default_rng(0)
    params = make_params(1.0, 0.0, 1.0, 1.0)
    xi = np.ascontiguousarray(rng.standard_normal((3, n)) * 3)
    data = np.ascontiguousarray(rng.standard_normal((13, n)) + 1j * rng.standard_normal((13, n)))
    coef = np.ascontiguousarray(branch_coefficients(params, np.linalg.norm(xi, axis=0),
                                                    ExpFunction(0.5)))
    mats = np.eye(3)[:, :, None] + 0.1 * rng.standard_normal((3, 3, n))
    out = {}
    for impl in kernels.implementations():
        t_apply = min(timeit.repeat(
            lambda: kernels.apply_blocks(coef, xi, data, 1.0, 1.0, impl=impl),
            number=1, repeat=repeat))
        t_inv = min(timeit.repeat(lambda: kernels.inv_det3(mats, impl=impl),
                                  number=1, repeat=repeat))
        out[impl] = (t_apply, t_inv)
    return out


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    res = bench(args.n, args.repeat)
    print(f"n = {args.n}, active backend = {kernels.BACKEND}")
    print(f"{'impl':8s} {'apply_blocks [s]':>18s} {'inv_det3 [s]':>14s}")
    for impl, (a, b) in res.items():
        print(f"{impl:8s} {a:18.5f} {b:14.5f}")
    if "python" in res and "cython" in res:
        print(f"speedup  {res['python'][0] / res['cython'][0]:18.2f} "
              f"{res['python'][1] / res['cython'][1]:14.2f}")


if __name__ == "__main__":
    main()
