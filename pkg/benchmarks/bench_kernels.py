"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--n 100000] [--d 16] [--repeat 5]

Both backends produce bit-identical output; this reports best-of-``repeat``
wall time per kernel and the speedup of the compiled one.
"""
import argparse
import timeit

import numpy as np

from hetldp import _kernels_py

try:
    from hetldp import _kernels
except ImportError:
    _kernels = None


def cases(k, n, d):
    streams = np.arange(n, dtype=np.uint64)
    keys = k.derive_keys(12345, streams)
    directions = np.zeros((n, d))
    directions[:, 0] = 1.0
    radii = np.full(n, 2.0)
    return {
        "derive_keys": lambda: k.derive_keys(12345, streams),
        "uniform_draws": lambda: k.uniform_draws(keys, 0, 4),
        "normal_draws": lambda: k.normal_draws(keys, 0, d),
        "sphere": lambda: k.sphere(keys, d, radii, 0),
        "hemisphere": lambda: k.hemisphere(keys, directions, radii, 0),
    }


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000, help="streams per call")
    ap.add_argument("--d", type=int, default=16, help="dimension for sphere kernels")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    py = cases(_kernels_py, args.n, args.d)
    cy = cases(_kernels, args.n, args.d) if _kernels is not None else {}
    print(f"n = {args.n}, d = {args.d}, best of {args.repeat}")
    print(f"{'kernel':<14}{'numpy ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in py.items():
        t_py = best(fn, args.repeat) * 1e3
        if name in cy:
            t_cy = best(cy[name], args.repeat) * 1e3
            print(f"{name:<14}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>9.1f}x")
        else:
            print(f"{name:<14}{t_py:>12.2f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
