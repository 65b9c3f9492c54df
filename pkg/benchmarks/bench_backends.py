"""Time the numba kernels against their pure-numpy twins.

Both backends are imported side by side, so one run compares them without
touching DEMPERS_BACKEND. Outputs are checked for equality as they are timed.

    python benchmarks/bench_backends.py [--repeat 5]
"""

import argparse
import statistics
import time

import numpy as np

from dempers import kernels
from dempers._backend import HAVE_NUMBA
from dempers.metrics import _augmented


def graph_case(n, m, seed=0):
    rng = np.random.default_rng(seed)
    values = np.round(rng.random(n), 3)
    src = np.concatenate([np.arange(n - 1), rng.integers(0, n, m - n + 1)])
    dst = np.concatenate([np.arange(1, n), rng.integers(0, n, m - n + 1)])
    keep = src != dst
    rows = np.concatenate([src[keep], dst[keep]])
    cols = np.concatenate([dst[keep], src[keep]])
    perm = np.argsort(rows, kind="stable")
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    order = np.lexsort((np.arange(n), values)).astype(np.int64)
    return order, values, indptr, cols[perm].astype(np.int64)


def diagram_points(rng, n):
    b = rng.random(n) * 0.9
    return np.column_stack([b, b + 0.01 + rng.random(n) * (1 - b - 0.01)])


def timed(fn, args, repeat):
    out = fn(*args)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return out, statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(1)
    cases = [
        ("sublevel 10k vertices / 30k edges", kernels.sublevel_pairs_nb, kernels.sublevel_pairs_py,
         graph_case(10_000, 30_000)),
        ("sublevel 100k vertices / 300k edges", kernels.sublevel_pairs_nb, kernels.sublevel_pairs_py,
         graph_case(100_000, 300_000)),
    ]
    for n in (50, 100, 200):
        C = _augmented(diagram_points(rng, n), diagram_points(rng, n), 1.0)
        cases.append((f"assignment W1, {n}+{n} points ({2 * n}x{2 * n})",
                      kernels.solve_assignment_nb, kernels.solve_assignment_py, (C,)))

    print(f"{'case':44s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}  same")
    for name, fast, slow, case in cases:
        a, t_fast = timed(fast, case, args.repeat)
        b, t_slow = timed(slow, case, max(1, args.repeat // 2))
        if isinstance(a, tuple):
            same = all(np.array_equal(x, y) for x, y in zip(a, b))
        else:
            same = np.array_equal(a, b)
        print(f"{name:44s} {t_fast * 1e3:8.2f}ms {t_slow * 1e3:8.2f}ms {t_slow / t_fast:7.1f}x  {same}")


if __name__ == "__main__":
    main()
