"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The Cython extension is preferred when it was built; setting
SPOILKIT_PURE=1 in the environment forces the fallback.  Both expose the
same two functions:

    best_span(start_logits, end_logits, ctx_lo, ctx_hi, max_answer_len)
    bm25_scores(query_term_ids, indptr, post_docs, post_freqs, idf,
                len_norm, k1, n_docs)
"""

import os

from . import _fallback

if os.environ.get("SPOILKIT_PURE") == "1":
    _impl = _fallback
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _fallback

best_span = _impl.best_span
bm25_scores = _impl.bm25_scores


def implementation() -> str:
    """Which kernel backend is active: "native" or "python"."""
    return _impl.IMPLEMENTATION


__all__ = ["best_span", "bm25_scores", "implementation"]
