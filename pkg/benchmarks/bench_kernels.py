"""Timing: jitted vs pure-python connected-subset counting.

The exhaustive counter iterates every (k-1)-combination of the candidate
universe and BFS-checks connectivity; the jitted odometer loop and the
bitmask python fallback implement the same semantics.  This script times
both on identical adjacency inputs and cross-checks the counts.

Run:
    python benchmarks/bench_kernels.py            # small default grid
    python benchmarks/bench_kernels.py --full     # adds the ~5e6-subset cases
"""

import argparse
import statistics
import time

from decorr._kernels import (
    USING_NUMBA,
    _count_py,
    adjacency,
    build_universe,
)

if USING_NUMBA:
    from decorr._kernels import _count_nb

DEFAULT_CASES = [(1, 1, 4), (1, 2, 4), (2, 1, 4), (2, 2, 3), (3, 1, 3)]
FULL_CASES = [(2, 2, 4), (3, 1, 4)]


def timed(fn, adj, k, repeats):
    runs = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(adj, k)
        runs.append(time.perf_counter() - t0)
    return int(out), statistics.median(runs)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--full", action="store_true",
                    help="include the multi-million-subset cases")
    args = ap.parse_args()

    cases = DEFAULT_CASES + (FULL_CASES if args.full else [])

    if USING_NUMBA:
        # compile outside the timed region
        warm = adjacency(build_universe(1, 1, 2), 1)
        _count_nb(warm, 2)
    else:
        print("numba unavailable or disabled (DECORR_DISABLE_NUMBA): "
              "timing the python path only\n")

    header = f"{'D':>2} {'R':>2} {'k':>2} {'universe':>9} {'count':>8} " \
             f"{'python':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for D, R, k in cases:
        pts = build_universe(D, R, k)
        adj = adjacency(pts, R)
        n_py, t_py = timed(_count_py, adj, k, args.repeats)
        if USING_NUMBA:
            n_nb, t_nb = timed(_count_nb, adj, k, args.repeats)
            assert n_nb == n_py, f"count mismatch at {(D, R, k)}"
            nb_col, speed = f"{t_nb:10.4f}", f"{t_py / t_nb:7.1f}x"
        else:
            nb_col, speed = f"{'-':>10}", f"{'-':>8}"
        print(f"{D:>2} {R:>2} {k:>2} {len(pts):>9} {n_py:>8} "
              f"{t_py:10.4f} {nb_col} {speed}")


if __name__ == "__main__":
    main()
