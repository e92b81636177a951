#!/usr/bin/env python3
"""Compare the compiled and pure path kernels, and indexed vs brute-force
retrieval.  Equivalent to `realnav bench`; kept as a standalone script so
the numbers are easy to regenerate after kernel changes.

Usage: python benchmarks/bench_kernels.py [--fields N] [--records N]
"""

import argparse

from realnav.bench import run_benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grid-size", type=int, default=100)
    parser.add_argument("--fields", type=int, default=30)
    parser.add_argument("--records", type=int, default=100_000)
    parser.add_argument("--queries", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    print(
        run_benchmark(
            grid_size=args.grid_size,
            fields=args.fields,
            n_records=args.records,
            n_queries=args.queries,
            seed=args.seed,
        )
    )


if __name__ == "__main__":
    main()
