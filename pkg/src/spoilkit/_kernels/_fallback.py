"""Pure-Python (numpy) implementations of the hot kernels.

Semantics are identical to `_native.pyx`; the parity suite in
tests/test_kernels.py checks both implementations against randomized
inputs and against each other.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"


def best_span(start_logits, end_logits, ctx_lo, ctx_hi, max_answer_len):
    """Argmax of start_logits[i] + end_logits[j] over valid spans.

    Valid spans satisfy ctx_lo <= i <= j <= ctx_hi and
    j - i + 1 <= max_answer_len.  Ties resolve to the smaller i, then the
    smaller j.  Returns (i, j) or (-1, -1) when no valid span exists.
    """
    start = np.asarray(start_logits, dtype=np.float64)
    end = np.asarray(end_logits, dtype=np.float64)
    if ctx_lo < 0 or ctx_hi >= start.shape[0] or ctx_lo > ctx_hi or max_answer_len < 1:
        return -1, -1

    best_i = best_j = -1
    best_score = -np.inf
    for i in range(ctx_lo, ctx_hi + 1):
        j_hi = min(i + max_answer_len - 1, ctx_hi)
        window = end[i : j_hi + 1]
        # np.argmax returns the first maximum, i.e. the smallest j
        rel = int(np.argmax(window))
        score = start[i] + window[rel]
        if score > best_score:
            best_score = score
            best_i, best_j = i, i + rel
    return best_i, best_j


def bm25_scores(query_term_ids, indptr, post_docs, post_freqs, idf, len_norm, k1, n_docs):
    """Accumulate Okapi BM25 scores for every document.

    The index is an inverted posting list in CSR form: term t owns the
    slice [indptr[t], indptr[t+1]) of post_docs/post_freqs.  Query term
    ids < 0 denote out-of-vocabulary tokens and contribute nothing.
    Duplicate query tokens contribute once per occurrence.
    """
    post_docs = np.asarray(post_docs, dtype=np.int64)
    post_freqs = np.asarray(post_freqs, dtype=np.float64)
    idf = np.asarray(idf, dtype=np.float64)
    len_norm = np.asarray(len_norm, dtype=np.float64)
    scores = np.zeros(n_docs, dtype=np.float64)
    for t in query_term_ids:
        if t < 0:
            continue
        lo, hi = int(indptr[t]), int(indptr[t + 1])
        if lo == hi:
            continue
        docs = post_docs[lo:hi]
        freqs = post_freqs[lo:hi]
        scores[docs] += idf[t] * freqs * (k1 + 1.0) / (freqs + len_norm[docs])
    return scores
