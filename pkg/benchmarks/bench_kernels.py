"""Benchmark the numba and pure-numpy kernel paths against each other.

Covers the two hot loops: edit-distance DP over a corpus of string pairs
(metric scoring) and query-vs-matrix scoring at dim 512 (k-NN retrieval).

    python benchmarks/bench_kernels.py [--pairs 2000] [--rows 500] [--queries 200]
"""

import argparse
import random
import string
import time

import numpy as np

from speech2latex._kernels import HAVE_NUMBA, NUMBA_IMPLS, NUMPY_IMPLS


def _codes(s):
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)


def bench_levenshtein(impl, pairs):
    start = time.perf_counter()
    total = 0
    for a, b in pairs:
        total += impl(a, b)
    return time.perf_counter() - start, total


def bench_scores(impl, matrix, queries):
    start = time.perf_counter()
    acc = 0.0
    for q in queries:
        acc += float(impl(matrix, q)[0])
    return time.perf_counter() - start, acc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2000, help="string pairs for the DP kernel")
    parser.add_argument("--rows", type=int, default=500, help="index rows for the scoring kernels")
    parser.add_argument("--queries", type=int, default=200, help="queries per scoring kernel")
    args = parser.parse_args()

    rng = random.Random(0)
    alphabet = string.ascii_letters + "+-^_{}\\αβγθπ"
    pairs = [
        (
            _codes("".join(rng.choices(alphabet, k=rng.randint(10, 60)))),
            _codes("".join(rng.choices(alphabet, k=rng.randint(10, 60)))),
        )
        for _ in range(args.pairs)
    ]
    nprng = np.random.default_rng(0)
    matrix = nprng.normal(size=(args.rows, 512))
    queries = nprng.normal(size=(args.queries, 512))

    backends = {"numpy": NUMPY_IMPLS}
    if HAVE_NUMBA:
        backends["numba"] = NUMBA_IMPLS
        # compile before timing
        NUMBA_IMPLS["levenshtein"](pairs[0][0], pairs[0][1])
        for name in ("cosine", "euclidean", "manhattan"):
            NUMBA_IMPLS[name](matrix[:2], queries[0])
    else:
        print("numba not installed; benchmarking the numpy path only")

    results = {}
    for backend, impls in backends.items():
        timings = {}
        timings["levenshtein"], check = bench_levenshtein(impls["levenshtein"], pairs)
        for name in ("cosine", "euclidean", "manhattan"):
            timings[name], _ = bench_scores(impls[name], matrix, queries)
        results[backend] = timings

    kernels = ["levenshtein", "cosine", "euclidean", "manhattan"]
    workload = {
        "levenshtein": f"{args.pairs} pairs",
        "cosine": f"{args.queries}x({args.rows},512)",
        "euclidean": f"{args.queries}x({args.rows},512)",
        "manhattan": f"{args.queries}x({args.rows},512)",
    }
    header = f"{'kernel':<12} {'workload':<18} " + " ".join(f"{b:>10}" for b in results)
    print(header)
    print("-" * len(header))
    for kernel in kernels:
        cells = " ".join(f"{results[b][kernel]*1e3:9.1f}ms" for b in results)
        print(f"{kernel:<12} {workload[kernel]:<18} {cells}")
    if HAVE_NUMBA:
        speedup = results["numpy"]["levenshtein"] / results["numba"]["levenshtein"]
        print(f"\nlevenshtein numba speedup vs numpy: {speedup:.1f}x")


if __name__ == "__main__":
    main()
