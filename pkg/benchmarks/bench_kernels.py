"""Benchmark: compiled kernels vs the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from spoilkit._kernels import _fallback

try:
    from spoilkit._kernels import _native
except ImportError:
    _native = None


def bench(fn, args_list, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for args in args_list:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def span_cases(rng, n_windows=400, n_tokens=384, max_answer_len=30):
    cases = []
    for _ in range(n_windows):
        start = rng.normal(size=n_tokens)
        end = rng.normal(size=n_tokens)
        cases.append((start, end, 12, n_tokens - 2, max_answer_len))
    return cases


def bm25_cases(rng, n_queries=2000, n_docs=50, n_terms=500):
    postings = [[] for _ in range(n_terms)]
    for t in range(n_terms):
        for d in sorted(rng.choice(n_docs, size=int(rng.integers(1, 12)),
                                   replace=False)):
            postings[t].append((int(d), float(rng.integers(1, 5))))
    indptr = np.zeros(n_terms + 1, dtype=np.int64)
    docs, freqs = [], []
    for t, posts in enumerate(postings):
        indptr[t + 1] = indptr[t] + len(posts)
        for d, f in posts:
            docs.append(d)
            freqs.append(f)
    docs = np.array(docs, dtype=np.int64)
    freqs = np.array(freqs)
    idf = rng.uniform(0.2, 3.0, size=n_terms)
    norm = rng.uniform(0.5, 2.5, size=n_docs)
    cases = []
    for _ in range(n_queries):
        q = rng.integers(0, n_terms, size=8).astype(np.int64)
        cases.append((q, indptr, docs, freqs, idf, norm, 1.5, n_docs))
    return cases


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    workloads = [
        ("best_span 400x384 tokens, answers<=30",
         "best_span", span_cases(rng, max_answer_len=30)),
        ("best_span 400x384 tokens, answers<=150",
         "best_span", span_cases(rng, max_answer_len=150)),
        ("bm25_scores 2000 queries, 50 docs",
         "bm25_scores", bm25_cases(rng)),
    ]

    impls = [("python", _fallback)] + ([("native", _native)] if _native else [])
    if _native is None:
        print("compiled kernels not built; benchmarking the fallback only\n")

    print(f"{'workload':<42} " + " ".join(f"{name:>10}" for name, _ in impls)
          + ("   speedup" if _native else ""))
    for label, fn_name, cases in workloads:
        times = [bench(getattr(impl, fn_name), cases, args.repeats)
                 for _, impl in impls]
        row = f"{label:<42} " + " ".join(f"{t * 1e3:>8.1f}ms" for t in times)
        if _native:
            row += f"   {times[0] / times[1]:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
