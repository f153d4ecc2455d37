"""Parity between the compiled kernels and the pure-Python fallback."""

import numpy as np
import pytest

from spoilkit import _kernels
from spoilkit._kernels import _fallback

try:
    from spoilkit._kernels import _native
except ImportError:
    _native = None

IMPLS = [("python", _fallback)] + ([("native", _native)] if _native else [])


def random_span_case(rng):
    n = int(rng.integers(2, 120))
    start = rng.normal(size=n)
    end = rng.normal(size=n)
    lo = int(rng.integers(0, n))
    hi = int(rng.integers(lo, n))
    max_len = int(rng.integers(1, 20))
    return start, end, lo, hi, max_len


def brute_best(start, end, lo, hi, max_len):
    best = None
    for i in range(lo, hi + 1):
        for j in range(i, min(i + max_len - 1, hi) + 1):
            s = start[i] + end[j]
            if best is None or s > best[0]:
                best = (s, i, j)
    return (-1, -1) if best is None else (best[1], best[2])


@pytest.mark.parametrize("name,impl", IMPLS)
class TestBestSpan:
    def test_matches_brute_force_on_random_cases(self, name, impl):
        rng = np.random.default_rng(17)
        for _ in range(300):
            start, end, lo, hi, max_len = random_span_case(rng)
            assert tuple(impl.best_span(start, end, lo, hi, max_len)) == \
                brute_best(start, end, lo, hi, max_len)

    def test_tie_break_prefers_smaller_i_then_j(self, name, impl):
        start = np.zeros(6)
        end = np.zeros(6)
        assert tuple(impl.best_span(start, end, 1, 4, 3)) == (1, 1)
        end[3] = 1.0
        end[4] = 1.0  # (1,3) and (1,4) tie through start; (2,3) ties too
        assert tuple(impl.best_span(start, end, 1, 4, 3)) == (1, 3)

    def test_degenerate_ranges_return_sentinel(self, name, impl):
        v = np.zeros(4)
        assert tuple(impl.best_span(v, v, 3, 2, 5)) == (-1, -1)
        assert tuple(impl.best_span(v, v, 0, 3, 0)) == (-1, -1)
        assert tuple(impl.best_span(v, v, -1, 3, 5)) == (-1, -1)
        assert tuple(impl.best_span(v, v, 0, 4, 5)) == (-1, -1)

    def test_max_answer_len_one_is_diagonal_argmax(self, name, impl):
        rng = np.random.default_rng(23)
        start = rng.normal(size=50)
        end = rng.normal(size=50)
        i, j = impl.best_span(start, end, 0, 49, 1)
        assert i == j == int(np.argmax(start + end))


def random_bm25_case(rng):
    n_docs = int(rng.integers(1, 30))
    n_terms = int(rng.integers(1, 40))
    postings = [[] for _ in range(n_terms)]
    for t in range(n_terms):
        docs = rng.choice(n_docs, size=int(rng.integers(0, min(n_docs, 8) + 1)),
                          replace=False)
        for d in sorted(docs):
            postings[t].append((int(d), float(rng.integers(1, 6))))
    indptr = np.zeros(n_terms + 1, dtype=np.int64)
    docs_flat, freqs_flat = [], []
    for t, posts in enumerate(postings):
        indptr[t + 1] = indptr[t] + len(posts)
        for d, f in posts:
            docs_flat.append(d)
            freqs_flat.append(f)
    idf = rng.uniform(0.1, 3.0, size=n_terms)
    norm = rng.uniform(0.5, 3.0, size=n_docs)
    query = rng.integers(-1, n_terms, size=int(rng.integers(0, 10))).astype(np.int64)
    return (query, indptr, np.array(docs_flat, dtype=np.int64),
            np.array(freqs_flat), idf, norm, 1.5, n_docs)


def brute_bm25(query, indptr, docs, freqs, idf, norm, k1, n_docs):
    scores = np.zeros(n_docs)
    for t in query:
        if t < 0:
            continue
        for p in range(indptr[t], indptr[t + 1]):
            d, f = docs[p], freqs[p]
            scores[d] += idf[t] * f * (k1 + 1) / (f + norm[d])
    return scores


@pytest.mark.parametrize("name,impl", IMPLS)
class TestBm25Scores:
    def test_matches_brute_force_accumulation(self, name, impl):
        rng = np.random.default_rng(31)
        for _ in range(200):
            case = random_bm25_case(rng)
            np.testing.assert_allclose(impl.bm25_scores(*case), brute_bm25(*case),
                                       rtol=0, atol=1e-12)

    def test_oov_terms_contribute_nothing(self, name, impl):
        query = np.array([-1, -1], dtype=np.int64)
        indptr = np.array([0, 1], dtype=np.int64)
        scores = impl.bm25_scores(query, indptr, np.array([0], dtype=np.int64),
                                  np.array([2.0]), np.array([1.0]), np.array([1.0]),
                                  1.5, 1)
        assert scores.tolist() == [0.0]

    def test_duplicate_query_terms_accumulate(self, name, impl):
        indptr = np.array([0, 1], dtype=np.int64)
        args = (indptr, np.array([0], dtype=np.int64), np.array([2.0]),
                np.array([1.0]), np.array([1.0]), 1.5, 1)
        once = impl.bm25_scores(np.array([0], dtype=np.int64), *args)
        twice = impl.bm25_scores(np.array([0, 0], dtype=np.int64), *args)
        np.testing.assert_allclose(twice, 2 * once)


@pytest.mark.skipif(_native is None, reason="compiled kernels unavailable")
class TestNativePythonParity:
    def test_best_span_choices_are_identical(self):
        rng = np.random.default_rng(41)
        for _ in range(400):
            start, end, lo, hi, max_len = random_span_case(rng)
            assert tuple(_native.best_span(start, end, lo, hi, max_len)) == \
                tuple(_fallback.best_span(start, end, lo, hi, max_len))

    def test_bm25_scores_agree(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            case = random_bm25_case(rng)
            np.testing.assert_allclose(_native.bm25_scores(*case),
                                       _fallback.bm25_scores(*case),
                                       rtol=0, atol=1e-12)


def test_active_implementation_is_reported():
    assert _kernels.implementation() in ("native", "python")
