"""Time one Monte Carlo batch per backend on the two-level lower-bound pattern.

The numpy fallback of the eligible-RS policy is a plain Python loop and is
slow at this size; pass a smaller --t to keep it short.

    python benchmarks/bench_backends.py --w 100 --t 10000 --trials 50
"""
import argparse
import time
from fractions import Fraction

import numpy as np

from coopwork.kernels import available_backends
from coopwork.patterns import gen_two_level_lb
from coopwork.simulator import monte_carlo
from coopwork.taskgraph import build_leveled


def bench(c, g, policy, trials, backend, repeat):
    monte_carlo(c, g, policy, 2, 0, backend=backend)  # compile / warm up
    best, work = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        s = monte_carlo(c, g, policy, trials, 1, backend=backend)
        best = min(best, time.perf_counter() - t0)
        work = s.work
    return best, work


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--w", type=int, default=100)
    ap.add_argument("--t", type=int, default=10_000)
    ap.add_argument("--alpha", default="1/2")
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    c = gen_two_level_lb(args.w, args.t, args.alpha)
    n1 = int(Fraction(args.alpha) * args.t)
    g = build_leveled([n1, args.t - n1] if n1 < args.t else [args.t])
    print(f"pattern: w={args.w} t={args.t} alpha={args.alpha}, {c.n} vertices, {args.trials} trials")
    for policy in ("mrs", "rs"):
        results = {b: bench(c, g, policy, args.trials, b, args.repeat) for b in available_backends()}
        works = [w for _, w in results.values()]
        same = all(np.array_equal(works[0], w) for w in works[1:])
        for b, (sec, _) in results.items():
            print(f"  {policy:4s} {b:6s} {sec:8.3f} s  {1e3 * sec / args.trials:8.2f} ms/trial")
        print(f"  {policy:4s} identical work across backends: {same}")


if __name__ == "__main__":
    main()
