# cython: language_level=3
"""Compiled implementations of the hot kernels (see _fallback.py for the
reference semantics)."""

import numpy as np

cimport cython

IMPLEMENTATION = "native"


@cython.boundscheck(False)
@cython.wraparound(False)
def best_span(start_logits, end_logits, int ctx_lo, int ctx_hi, int max_answer_len):
    """Argmax of start_logits[i] + end_logits[j] over valid spans.

    Same contract as the fallback: ctx_lo <= i <= j <= ctx_hi,
    j - i + 1 <= max_answer_len, ties to smaller i then smaller j,
    (-1, -1) when no valid span exists.
    """
    cdef double[::1] start = np.ascontiguousarray(start_logits, dtype=np.float64)
    cdef double[::1] end = np.ascontiguousarray(end_logits, dtype=np.float64)
    cdef Py_ssize_t n = start.shape[0]
    if ctx_lo < 0 or ctx_hi >= n or ctx_lo > ctx_hi or max_answer_len < 1:
        return -1, -1

    cdef Py_ssize_t i, j, j_hi
    cdef Py_ssize_t best_i = -1, best_j = -1
    cdef double score, best_score = -np.inf
    for i in range(ctx_lo, ctx_hi + 1):
        j_hi = i + max_answer_len - 1
        if j_hi > ctx_hi:
            j_hi = ctx_hi
        for j in range(i, j_hi + 1):
            score = start[i] + end[j]
            if score > best_score:
                best_score = score
                best_i = i
                best_j = j
    return int(best_i), int(best_j)


@cython.boundscheck(False)
@cython.wraparound(False)
def bm25_scores(query_term_ids, indptr, post_docs, post_freqs, idf, len_norm,
                double k1, Py_ssize_t n_docs):
    """Accumulate Okapi BM25 scores for every document (CSR postings)."""
    cdef long long[::1] q = np.ascontiguousarray(query_term_ids, dtype=np.int64)
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef long long[::1] docs = np.ascontiguousarray(post_docs, dtype=np.int64)
    cdef double[::1] freqs = np.ascontiguousarray(post_freqs, dtype=np.float64)
    cdef double[::1] idf_v = np.ascontiguousarray(idf, dtype=np.float64)
    cdef double[::1] norm = np.ascontiguousarray(len_norm, dtype=np.float64)

    out = np.zeros(n_docs, dtype=np.float64)
    cdef double[::1] scores = out
    cdef Py_ssize_t qi, p, lo, hi
    cdef long long t, d
    cdef double f
    for qi in range(q.shape[0]):
        t = q[qi]
        if t < 0:
            continue
        lo = ip[t]
        hi = ip[t + 1]
        for p in range(lo, hi):
            d = docs[p]
            f = freqs[p]
            scores[d] += idf_v[t] * f * (k1 + 1.0) / (f + norm[d])
    return out
