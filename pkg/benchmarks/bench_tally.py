"""Time the compiled tally kernel against the numpy fallback.

    python3 benchmarks/bench_tally.py --trials 1000000 --copies 7
"""

import argparse
import time

import numpy as np

from steerdistill.distill import kernel


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--copies", type=int, default=7, help="N; each trial draws N-1 filter outcomes")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    u = rng.random((args.trials, args.copies - 1))
    # two filtering parties with a ~0.12 keep probability, as for GGHZ at theta=0.25
    cdf = np.cumsum([0.1224, 0.2195, 0.2195, 0.4386])
    cdf[-1] = 1.0

    t_py, r_py = best_of(lambda: kernel.python_tally_block(u, cdf, True), args.repeats)
    print(f"numpy  : {t_py * 1e3:9.2f} ms  {args.trials / t_py / 1e6:7.2f} Mtrials/s  {r_py}")
    if kernel.BACKEND != "cython":
        print("cython : extension not built (pip install -e . --no-build-isolation)")
        return
    t_cy, r_cy = best_of(lambda: kernel.tally_block(u, cdf, True), args.repeats)
    print(f"cython : {t_cy * 1e3:9.2f} ms  {args.trials / t_cy / 1e6:7.2f} Mtrials/s  {r_cy}")
    print(f"speedup: {t_py / t_cy:.1f}x  identical={r_py == r_cy}")


if __name__ == "__main__":
    main()
