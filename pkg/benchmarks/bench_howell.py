"""Compare the compiled Howell kernel with the pure-Python one.

    python3 benchmarks/bench_howell.py --sizes 20 40 80 --repeat 3
"""

import argparse
import random
import time

from plethora import linalg


def random_rows(n, p, M, seed):
    rng = random.Random(seed)
    mod = p ** M
    # scale some rows by p so the non-unit pivot handling is exercised
    return [[rng.randrange(mod) * (p if i % 3 == 0 else 1) % mod for _ in range(n)] for i in range(n)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80])
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--M", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"backend available: {linalg.backend()}  p={args.p} M={args.M}")
    print(f"{'n':>5} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for n in args.sizes:
        rows = random_rows(n, args.p, args.M, seed=n)
        py = best_of(lambda: linalg.howell_rows(rows, n, args.p, args.M, force_python=True), args.repeat)
        fast = best_of(lambda: linalg.howell_rows(rows, n, args.p, args.M), args.repeat)
        same = linalg.howell_rows(rows, n, args.p, args.M, force_python=True) == \
            linalg.howell_rows(rows, n, args.p, args.M)
        print(f"{n:>5} {py:>10.4f} {fast:>11.4f} {py / fast:>7.1f}x" + ("" if same else "  MISMATCH"))


if __name__ == "__main__":
    main()
