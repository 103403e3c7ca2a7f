"""Timing comparison of the compiled and pure-python distance kernels.

Runs each kernel several times on the same random matrices and reports
the best wall time per backend plus the compiled speedup. Exits with an
error if the requested backend is not importable.

    python3 benchmarks/bench_kernels.py --rows 400 --dim 600 --repeats 5
"""

import argparse
import time

import numpy as np

from weightinfo._kernels import available_backends, get_backend


def best_time(func, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_backend(name, rows, dim, queries, repeats, seed):
    backend = get_backend(name)
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((rows, dim))
    query = rng.standard_normal((queries, dim))
    results = {}
    results["pairwise_sq"] = best_time(
        lambda: backend.pairwise_sq(matrix), repeats
    )
    results["cross_sq"] = best_time(
        lambda: backend.cross_sq(matrix, query), repeats
    )
    results["nearest_sq_bulk"] = best_time(
        lambda: backend.nearest_sq_bulk(matrix, query), repeats
    )
    return results


def main():
    parser = argparse.ArgumentParser(
        description="benchmark the distance kernels on both backends"
    )
    parser.add_argument("--rows", type=int, default=400,
                        help="reference matrix rows")
    parser.add_argument("--dim", type=int, default=600,
                        help="vector dimension")
    parser.add_argument("--queries", type=int, default=400,
                        help="query matrix rows")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repetitions; best time wins")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    print(f"matrix {args.rows}x{args.dim}, queries {args.queries}, "
          f"best of {args.repeats}")
    print()

    timings = {
        name: bench_backend(
            name, args.rows, args.dim, args.queries, args.repeats, args.seed
        )
        for name in backends
    }
    kernels = ("pairwise_sq", "cross_sq", "nearest_sq_bulk")
    header = f"{'kernel':<16}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for kernel in kernels:
        row = f"{kernel:<16}"
        for name in backends:
            row += f"{timings[name][kernel] * 1e3:>10.2f}ms"
        if len(backends) == 2:
            ratio = timings[backends[1]][kernel] / timings[backends[0]][kernel]
            row += f"{ratio:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
