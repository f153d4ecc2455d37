"""spoilkit: a model-agnostic clickbait-spoiling pipeline.

Classify a post's required spoiler type, reduce its context with BM25,
extract spoiler spans from pluggable start/end logits, and evaluate the
results.  Neural scoring is delegated to a scorer implementation (stub,
file replay, or external bridge process).
"""

__version__ = "0.1.0"

from .corpus import (ClickbaitPost, CorpusSplit, CorpusValidationError,
                     SpoilerPosition, SpoilerType, extract_text_at,
                     format_classification_input, load_corpus)
from .metrics import EvalReport, bleu4, evaluate_split, meteor_reduced
from .qa_prep import Window, align_answer, make_windows, prepare_task_inputs, tokenize_with_offsets
from .retrieval import Bm25Index, Bm25Params, ReducedContext, bm25_score, build_index, reduce_context
from .scorer import BridgeScorer, FileScorer, StubScorer, make_scorer
from .span_select import (LogitSheet, SpanPrediction, best_span_in_window,
                          combine_tasks, recover_text, select_across_windows)

__all__ = [
    "__version__",
    "ClickbaitPost", "CorpusSplit", "CorpusValidationError", "SpoilerPosition",
    "SpoilerType", "extract_text_at", "format_classification_input", "load_corpus",
    "EvalReport", "bleu4", "evaluate_split", "meteor_reduced",
    "Window", "align_answer", "make_windows", "prepare_task_inputs", "tokenize_with_offsets",
    "Bm25Index", "Bm25Params", "ReducedContext", "bm25_score", "build_index", "reduce_context",
    "BridgeScorer", "FileScorer", "StubScorer", "make_scorer",
    "LogitSheet", "SpanPrediction", "best_span_in_window", "combine_tasks",
    "recover_text", "select_across_windows",
]
