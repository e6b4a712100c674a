"""Time the Cython kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 12,24,40] [--repeat 3]

Both backends are run on the same seeded Euclidean distance matrices and
must return identical results; the table reports the best wall time of
``--repeat`` runs per kernel and size.
"""
import argparse
import time

import numpy as np

from ptolemykit import kernels

FLOOR = 1e-12


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="12,24,40,60")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled kernels not built; timing the numpy fallback only")
    print(f"{'kernel':<10}{'n':>5}" + "".join(f"{b + ' [s]':>14}" for b in backends) + f"{'speedup':>10}")
    rng = np.random.default_rng(args.seed)
    for n in (int(s) for s in args.sizes.split(",")):
        P = rng.normal(size=(n, 3))
        D = np.linalg.norm(P[:, None] - P[None], axis=-1)
        order = np.arange(n, dtype=np.intp)
        jobs = {
            "ptolemy": lambda b: kernels.ptolemy_scan(D, FLOOR, backend=b),
            "triangle": lambda b: kernels.triangle_scan(D, FLOOR, backend=b),
            "circle": lambda b: kernels.circle_scan(D, order, FLOOR, backend=b),
        }
        for name, job in jobs.items():
            times, outs = [], []
            for b in backends:
                t, out = best_time(lambda: job(b), args.repeat)
                times.append(t)
                outs.append(out)
            if len(outs) == 2 and outs[0] != outs[1]:
                raise SystemExit(f"backends disagree on {name} n={n}: {outs}")
            speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else f"{'-':>10}"
            print(f"{name:<10}{n:>5}" + "".join(f"{t:>14.4f}" for t in times) + speed)


if __name__ == "__main__":
    main()
