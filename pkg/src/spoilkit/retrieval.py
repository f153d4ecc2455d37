"""Okapi BM25 over a post's paragraphs and top-k context reduction.

Tokenization for retrieval is Unicode lowercasing plus splitting on
non-alphanumeric runs; no stemming, no stopwords.  Defaults k1=1.5,
b=0.75.  Ranking keeps the top k paragraphs by score (ties to the lower
original index) and re-emits them in document order; when k covers every
paragraph the reduction is the identity.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .corpus import ClickbaitPost

DEFAULT_K1 = 1.5
DEFAULT_B = 0.75
DEFAULT_TOP_K = 5

# word characters minus underscore == Unicode alphanumeric runs
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def bm25_tokenize(text: str) -> list:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Bm25Params:
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not (0.0 <= self.b <= 1.0):
            raise ValueError(f"b must be in [0, 1], got {self.b}")


class Bm25Index:
    """Immutable per-post index; safe for concurrent scoring after build.

    Keeps both the dictionary statistics (doc_term_freqs, doc_freqs, ...)
    and a private CSR inverted-postings layout consumed by the scoring
    kernel.
    """

    def __init__(self, paragraphs: Sequence[str], params: Bm25Params = Bm25Params()):
        if len(paragraphs) == 0:
            raise ValueError("cannot index an empty paragraph list")
        self.params = params
        self.doc_term_freqs = []
        self.doc_lengths = []
        self.doc_freqs = {}
        for text in paragraphs:
            freqs = {}
            tokens = bm25_tokenize(text)
            for tok in tokens:
                freqs[tok] = freqs.get(tok, 0) + 1
            self.doc_term_freqs.append(freqs)
            self.doc_lengths.append(len(tokens))
            for tok in freqs:
                self.doc_freqs[tok] = self.doc_freqs.get(tok, 0) + 1
        self.n_docs = len(paragraphs)
        self.avg_doc_length = sum(self.doc_lengths) / self.n_docs
        if self.avg_doc_length <= 0:
            raise ValueError("paragraphs contain no indexable tokens")
        self._build_postings()

    def _build_postings(self):
        self._term_ids = {t: i for i, t in enumerate(sorted(self.doc_freqs))}
        n_terms = len(self._term_ids)
        counts = np.zeros(n_terms + 1, dtype=np.int64)
        for freqs in self.doc_term_freqs:
            for tok in freqs:
                counts[self._term_ids[tok] + 1] += 1
        self._indptr = np.cumsum(counts)
        total = int(self._indptr[-1])
        self._post_docs = np.zeros(total, dtype=np.int64)
        self._post_freqs = np.zeros(total, dtype=np.float64)
        cursor = self._indptr[:-1].copy()
        for doc, freqs in enumerate(self.doc_term_freqs):
            for tok, f in freqs.items():
                t = self._term_ids[tok]
                self._post_docs[cursor[t]] = doc
                self._post_freqs[cursor[t]] = f
                cursor[t] += 1
        self._idf = np.zeros(n_terms, dtype=np.float64)
        for tok, t in self._term_ids.items():
            df = self.doc_freqs[tok]
            self._idf[t] = math.log((self.n_docs - df + 0.5) / (df + 0.5) + 1.0)
        # k1 * (1 - b + b * |d| / avgdl), precomputed per document
        rel = np.asarray(self.doc_lengths, dtype=np.float64) / self.avg_doc_length
        self._len_norm = self.params.k1 * (1.0 - self.params.b + self.params.b * rel)

    def query_term_ids(self, query: str) -> np.ndarray:
        """Term ids for each query token in order; -1 marks unknown terms."""
        return np.asarray([self._term_ids.get(t, -1) for t in bm25_tokenize(query)],
                          dtype=np.int64)


def build_index(paragraphs: Sequence[str], params: Bm25Params = Bm25Params()) -> Bm25Index:
    return Bm25Index(paragraphs, params)


def bm25_score(index: Bm25Index, query: str, doc: int) -> float:
    """Okapi BM25 score of one paragraph against a query.

    sum over query tokens t of
        idf(t) * f(t,d) * (k1+1) / (f(t,d) + k1 * (1 - b + b * |d|/avgdl))
    with idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1).  Duplicate query
    tokens contribute once per occurrence; unknown terms contribute 0.

    Computed directly from the dictionary statistics, independently of the
    postings kernel used by scores_for_query.
    """
    if not (0 <= doc < index.n_docs):
        raise IndexError(f"doc {doc} out of range (n_docs={index.n_docs})")
    k1, b = index.params.k1, index.params.b
    freqs = index.doc_term_freqs[doc]
    norm = k1 * (1.0 - b + b * index.doc_lengths[doc] / index.avg_doc_length)
    score = 0.0
    for tok in bm25_tokenize(query):
        f = freqs.get(tok, 0)
        if f == 0:
            continue
        df = index.doc_freqs[tok]
        idf = math.log((index.n_docs - df + 0.5) / (df + 0.5) + 1.0)
        score += idf * f * (k1 + 1.0) / (f + norm)
    return score


def scores_for_query(index: Bm25Index, query: str) -> np.ndarray:
    """BM25 scores of every paragraph for one query (kernel-backed)."""
    q = index.query_term_ids(query)
    return _kernels.bm25_scores(q, index._indptr, index._post_docs,
                                index._post_freqs, index._idf, index._len_norm,
                                index.params.k1, index.n_docs)


@dataclass(frozen=True)
class ReducedContext:
    """Top-k paragraphs of a post, restored to original document order."""

    post_id: str
    kept_indices: tuple
    paragraphs: tuple
    k: int

    def to_record(self) -> dict:
        return {"post_id": self.post_id, "kept_indices": list(self.kept_indices),
                "k": self.k}

    def to_json_line(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, separators=(",", ":"))


def top_k_indices(scores: Sequence[float], k: int) -> list:
    """Indices of the k highest scores, ties to the lower index, sorted ascending."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return sorted(order[:k])


def reduce_context(post: ClickbaitPost, k: int = DEFAULT_TOP_K,
                   params: Bm25Params = Bm25Params()) -> ReducedContext:
    """Keep the k paragraphs most relevant to the post title.

    The title text is the query.  When k >= the paragraph count the result
    is the identity reduction (every paragraph, original order).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(post.paragraphs)
    if k >= n:
        kept = list(range(n))
    else:
        try:
            index = build_index(post.paragraphs, params)
        except ValueError:
            # no indexable tokens anywhere: all scores would tie at zero,
            # so the index tie-break keeps the first k paragraphs
            kept = list(range(k))
        else:
            scores = scores_for_query(index, post.title_text)
            kept = top_k_indices(scores, k)
    return ReducedContext(
        post_id=post.id,
        kept_indices=tuple(kept),
        paragraphs=tuple(post.paragraphs[i] for i in kept),
        k=k,
    )


def dump_reductions(reductions: Iterable[ReducedContext], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for red in reductions:
            fh.write(red.to_json_line() + "\n")
