"""Time the compiled and numpy memory-kernel steppers on the same problem.

    python benchmarks/bench_volterra.py [--rank 8] [--steps 2000 5000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from qrelevance import _volterra_py

try:
    from qrelevance import _volterra
except ImportError:
    _volterra = None


def problem(rank, steps, seed=0):
    rng = np.random.default_rng(seed)
    n = 2 * steps + 1
    a = 0.1 * (rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank)))
    k = 0.1 * (rng.normal(size=(n, rank, rank)) + 1j * rng.normal(size=(n, rank, rank)))
    f = 0.1 * (rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank)))
    return a, k, f, rng.normal(size=rank) + 0j


def best_of(fn, args, repeat):
    times, out = [], None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rank", type=int, default=8)
    ap.add_argument("--steps", type=int, nargs="+", default=[1000, 2000, 5000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'steps':>6} {'rank':>4} {'python s':>10} {'cython s':>10} {'speedup':>8} {'max diff':>9}")
    for steps in args.steps:
        a, k, f, y0 = problem(args.rank, steps)
        call = (a, k, f, y0, 1e-3, steps)
        t_py, ref = best_of(_volterra_py.volterra_midpoint, call, args.repeat)
        if _volterra is None:
            print(f"{steps:>6} {args.rank:>4} {t_py:>10.3f} {'n/a':>10}")
            continue
        t_cy, got = best_of(_volterra.volterra_midpoint, call, args.repeat)
        diff = np.max(np.abs(got - ref))
        print(f"{steps:>6} {args.rank:>4} {t_py:>10.3f} {t_cy:>10.3f} {t_py / t_cy:>7.1f}x {diff:>9.1e}")


if __name__ == "__main__":
    main()
