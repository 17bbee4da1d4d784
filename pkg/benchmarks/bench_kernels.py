"""Compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each case is run on both backends, the outputs are compared, and the best wall time of
``--repeat`` runs is printed.
"""

import argparse
import time

import numpy as np

from selmer_ratios import families as fm
from selmer_ratios import kernels
from selmer_ratios.densities import _term_arrays
from selmer_ratios.stats import box_bounds

try:
    from selmer_ratios import _kernels as compiled
except ImportError:
    compiled = None


def grid_case(fid, q):
    G = fm.get(fid)
    polys = [_term_arrays(G.f4), _term_arrays(G.f6)]
    return f"grid_eval {fid} q={q}", lambda mod: mod.grid_eval(polys, q)


def box_case(fid, X):
    G = fm.get(fid)
    Amax, Bmax = box_bounds(G, X, 2)
    args = (_term_arrays(G.f4), _term_arrays(G.f6), *G.weights, Amax, Bmax,
            int(X ** (1 / 3)) + 1, int(X**0.5) + 1, -Amax, Amax)
    return f"enumerate_box {fid} X={X:.0e}", lambda mod: kernels.enumerate_box(*args, backend=mod)


CASES = [
    grid_case("G(1,5)", 101),
    grid_case("G(1,12)", 199),
    box_case("G(1,2)", 10**8),
    box_case("G(1,3)", 10**14),
    box_case("G(1,7)", 10**40),
]


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def same(x, y):
    if isinstance(x, np.ndarray):
        return np.array_equal(x, y)
    return all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(x, y))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled extension not built; only the fallback is available")
        return
    print(f"{'case':36s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}  equal")
    for name, run in CASES:
        tc, oc = best(lambda: run(compiled), args.repeat)
        tp, op = best(lambda: run(kernels.python), 1)
        print(f"{name:36s} {tc:10.4f} {tp:10.4f} {tp / tc:8.1f}  {same(oc, op)}")


if __name__ == "__main__":
    main()
