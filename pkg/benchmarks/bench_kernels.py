"""Time the compiled pair kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 16 64 256] [--repeat 5]

Both kernels compute the exact inverse-Lipschitz minimum over all segment
pairs of a generated curve; the script also checks they agree.
"""

import argparse
import time

import numpy as np

from bilipapprox import _pairs_py
from bilipapprox.testkit import GenSpec, gen_bilip_curve

try:
    from bilipapprox import _pairs
except ImportError:
    _pairs = None


def best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 64, 256, 512])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    if _pairs is None:
        print("compiled kernel not built; only the numpy fallback is available")
    print(f"{'segments':>8} {'numpy s':>10} {'compiled s':>11} {'speedup':>8} {'agree':>6}")
    for n in args.sizes:
        c = gen_bilip_curve(GenSpec(args.seed, 4.0, n + 1))
        idx = np.arange(c.n_segments)
        py = best_time(lambda: _pairs_py.pair_min(c.t, c.pts, idx, idx, True), args.repeat)
        ref = _pairs_py.pair_min(c.t, c.pts, idx, idx, True)[0]
        if _pairs is None:
            print(f"{n:>8} {py:>10.2e} {'-':>11} {'-':>8} {'-':>6}")
            continue
        cy = best_time(lambda: _pairs.pair_min(c.t, c.pts, idx, idx, True), args.repeat)
        val = _pairs.pair_min(c.t, c.pts, idx, idx, True)[0]
        print(f"{n:>8} {py:>10.2e} {cy:>11.2e} {py / cy:>7.1f}x {str(abs(val - ref) <= 1e-12):>6}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
