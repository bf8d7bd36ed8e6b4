"""Compare the numba kernels with the numpy/scipy fallbacks.

    python benchmarks/bench_backends.py [--sizes 256 1024 4096] [--repeat 3]

Times one full solve per (backend, path, N) on the cos-kernel problem with
AB2, after a warm-up call so JIT compilation is excluded. Also reports the
largest difference between the two backends' solutions.
"""

import argparse
import time

import numpy as np

from volterra_msm import _accel
from volterra_msm.harness import problem
from volterra_msm.methods import builtin
from volterra_msm.solver import _table, make_samples, solve


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--method", default="ab2")
    ap.add_argument("--problem", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    if len(backends) == 1:
        print("numba not available; timing the numpy backend only")
    prob, meth = problem(args.problem), builtin(args.method)

    print(f"{'path':<11}{'N':>7}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max|diff|':>12}")
    for path in ("weightform", "recursive"):
        for N in args.sizes:
            s = make_samples(prob, N, 1e-6, 0)
            _table.cache_clear()
            times, sols = {}, {}
            for b in backends:
                solve(prob, make_samples(prob, 16, 0.0), meth, path, backend=b)  # warm-up / JIT
                times[b], sols[b] = best_of(lambda: solve(prob, s, meth, path, backend=b), args.repeat)
            line = f"{path:<11}{N:>7}" + "".join(f"{times[b]:>11.4f}s" for b in backends)
            if "numba" in times:
                diff = np.max(np.abs(sols["numba"].u - sols["numpy"].u))
                line += f"{times['numpy'] / times['numba']:>9.1f}x{diff:>12.1e}"
            print(line)


if __name__ == "__main__":
    main()
