"""Span extraction from per-window start/end logits.

Per window, the best span maximizes start_logit[i] + end_logit[j] over the
context region subject to a per-spoiler-type answer-length cap; across
windows the most confident (highest-scoring) window wins.  When an
auxiliary task stream exists, the two task winners are re-scored under
both tasks' logits by span negative log-likelihood and the lower combined
cost wins.

The no-answer sentinel is the CLS span (0, 0) with empty text; sentinels
lose to any real span.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .qa_prep import TASK_ORIG, Window

# answer length caps (context tokens) per spoiler type
MAX_ANSWER_LEN_PHRASE = 30
MAX_ANSWER_LEN_PASSAGE = 150
MAX_ANSWER_LEN_MULTI = 30

DEFAULT_COMBINE_ALPHA = 0.5

_MULTI_CANDIDATES_PER_WINDOW = 256


@dataclass(frozen=True)
class LogitSheet:
    """Per-window start/end logit vectors from a scorer."""

    post_id: str
    task: str
    window_index: int
    start_logits: np.ndarray
    end_logits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start_logits",
                           np.asarray(self.start_logits, dtype=np.float64))
        object.__setattr__(self, "end_logits",
                           np.asarray(self.end_logits, dtype=np.float64))
        if self.start_logits.shape != self.end_logits.shape or self.start_logits.ndim != 1:
            raise ValueError("start/end logits must be 1-d vectors of equal length")


@dataclass(frozen=True)
class SpanPrediction:
    post_id: str
    task: str
    window_index: int
    start_token: int
    end_token: int
    score: float  # start_logit + end_logit
    text: str
    nll: float    # -log softmax(start)[i] - log softmax(end)[j]

    @property
    def is_no_answer(self) -> bool:
        return self.start_token == 0 and self.end_token == 0

    def to_record(self) -> dict:
        return {
            "post_id": self.post_id,
            "task": self.task,
            "window_index": self.window_index,
            "start_token": self.start_token,
            "end_token": self.end_token,
            "score": self.score,
            "text": self.text,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, ensure_ascii=False,
                          separators=(",", ":"))


def recover_text(window: Window, span: tuple, context: str) -> str:
    """Context slice covered by a token span; the (0, 0) sentinel yields ""."""
    s, e = span
    if s == 0 and e == 0:
        return ""
    if not (0 <= s <= e < len(window.token_ids)):
        raise ValueError(f"span {span} out of range for window of {len(window.token_ids)} tokens")
    off_s, off_e = window.offsets[s], window.offsets[e]
    if off_s is None or off_e is None:
        raise ValueError(f"span {span} does not point at context tokens")
    return context[off_s[0]:off_e[1]]


def span_nll(sheet: LogitSheet, start: int, end: int) -> float:
    """Negative log-likelihood of a span under the softmaxed logit vectors."""
    s_lse = _logsumexp(sheet.start_logits)
    e_lse = _logsumexp(sheet.end_logits)
    return float((s_lse - sheet.start_logits[start]) + (e_lse - sheet.end_logits[end]))


def _logsumexp(x: np.ndarray) -> float:
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def _check_sheet(sheet: LogitSheet, window: Window) -> None:
    if (sheet.post_id, sheet.task, sheet.window_index) != (
            window.post_id, window.task, window.window_index):
        raise ValueError(
            f"sheet {sheet.post_id}/{sheet.task}/{sheet.window_index} does not "
            f"match window {window.post_id}/{window.task}/{window.window_index}")
    if len(sheet.start_logits) != len(window.token_ids):
        raise ValueError(
            f"logit length {len(sheet.start_logits)} != window token count "
            f"{len(window.token_ids)}")


def _sentinel(sheet: LogitSheet, window: Window) -> SpanPrediction:
    return SpanPrediction(
        post_id=window.post_id, task=window.task, window_index=window.window_index,
        start_token=0, end_token=0,
        score=float(sheet.start_logits[0] + sheet.end_logits[0]),
        text="", nll=span_nll(sheet, 0, 0))


def best_span_in_window(sheet: LogitSheet, window: Window, max_answer_len: int,
                        context: str) -> SpanPrediction:
    """Highest-scoring valid span of one window.

    Valid spans keep start <= end inside the context region with length at
    most max_answer_len; ties resolve to the smaller start then the smaller
    end.  An empty context region yields the no-answer sentinel.
    """
    _check_sheet(sheet, window)
    ctx = window.context_token_range()
    if ctx is None:
        return _sentinel(sheet, window)
    i, j = _kernels.best_span(sheet.start_logits, sheet.end_logits,
                              ctx[0], ctx[1], max_answer_len)
    if i < 0:
        return _sentinel(sheet, window)
    return SpanPrediction(
        post_id=window.post_id, task=window.task, window_index=window.window_index,
        start_token=i, end_token=j,
        score=float(sheet.start_logits[i] + sheet.end_logits[j]),
        text=recover_text(window, (i, j), context),
        nll=span_nll(sheet, i, j))


def select_across_windows(preds: Sequence[SpanPrediction]) -> SpanPrediction:
    """Most confident window: maximal score, sentinels lose to any real span,
    ties to the lower window index."""
    if not preds:
        raise ValueError("no window predictions to select from")
    first = preds[0]
    for p in preds[1:]:
        if (p.post_id, p.task) != (first.post_id, first.task):
            raise ValueError("window predictions mix posts or tasks")
    real = [p for p in preds if not p.is_no_answer]
    pool = real if real else list(preds)
    best = pool[0]
    for p in pool[1:]:
        if p.score > best.score or (p.score == best.score
                                    and p.window_index < best.window_index):
            best = p
    return best


class TaskView:
    """One task's windows, logit sheets, and flattened context, for
    cross-task re-scoring of candidate spans."""

    def __init__(self, windows: Sequence[Window], sheets: Sequence[LogitSheet],
                 context: str):
        by_index = {s.window_index: s for s in sheets}
        self.windows = list(windows)
        self.sheets = [by_index[w.window_index] for w in self.windows]
        self.context = context
        for w, s in zip(self.windows, self.sheets):
            _check_sheet(s, w)

    def no_answer_nll(self) -> float:
        """Most favorable sentinel NLL across the task's windows."""
        return min(span_nll(s, 0, 0) for s in self.sheets)

    def text_nll(self, text: str) -> float:
        """Lowest NLL of any occurrence of `text` across windows.

        Occurrences must fall entirely inside a window's character span;
        the span evaluated is the smallest token range covering the
        occurrence.  Unlocatable (or empty) text gets the no-answer NLL.
        """
        best = None
        if text:
            occurrences = []
            at = self.context.find(text)
            while at >= 0:
                occurrences.append((at, at + len(text)))
                at = self.context.find(text, at + 1)
            for (o_lo, o_hi) in occurrences:
                for w, s in zip(self.windows, self.sheets):
                    w_lo, w_hi = w.context_char_span
                    if o_lo < w_lo or o_hi > w_hi:
                        continue
                    cover = _token_cover(w, o_lo, o_hi)
                    if cover is None:
                        continue
                    nll = span_nll(s, cover[0], cover[1])
                    if best is None or nll < best:
                        best = nll
        return self.no_answer_nll() if best is None else best


def _token_cover(window: Window, span_lo: int, span_hi: int) -> Optional[tuple]:
    start_tok = end_tok = None
    for i, off in enumerate(window.offsets):
        if off is None:
            continue
        if start_tok is None and off[1] > span_lo:
            start_tok = i
        if off[0] < span_hi:
            end_tok = i
    if start_tok is None or end_tok is None or start_tok > end_tok:
        return None
    return start_tok, end_tok


def combine_tasks(orig: SpanPrediction, aux: SpanPrediction,
                  orig_view: TaskView, aux_view: TaskView,
                  alpha: float = DEFAULT_COMBINE_ALPHA) -> SpanPrediction:
    """Choose between the two task winners by combined span NLL.

    Each candidate's text is re-scored under both tasks' logits; the
    combined cost is nll_orig + alpha * nll_aux and the lower cost wins,
    with ties (and alpha == 0, where the auxiliary term vanishes) going to
    the title-text task.
    """
    if orig.post_id != aux.post_id:
        raise ValueError("combine_tasks needs predictions for the same post")
    if alpha == 0.0:
        return orig
    if orig.text == aux.text:
        return orig
    candidates = [(orig_view.text_nll(p.text) + alpha * aux_view.text_nll(p.text),
                   0 if p.task == TASK_ORIG else 1, p)
                  for p in (orig, aux)]
    candidates.sort(key=lambda c: (c[0], c[1]))
    return candidates[0][2]


def top_spans_in_window(sheet: LogitSheet, window: Window, max_answer_len: int,
                        limit: int = _MULTI_CANDIDATES_PER_WINDOW):
    """Valid spans of one window ordered by (-score, start, end), capped."""
    _check_sheet(sheet, window)
    ctx = window.context_token_range()
    if ctx is None:
        return []
    lo, hi = ctx
    start = sheet.start_logits
    end = sheet.end_logits
    spans = []
    for i in range(lo, hi + 1):
        j_hi = min(i + max_answer_len - 1, hi)
        scores = start[i] + end[i:j_hi + 1]
        for rel, sc in enumerate(scores):
            spans.append((-float(sc), i, i + rel))
    spans.sort()
    return spans[:limit]


def select_multi_spans(sheets: Sequence[LogitSheet], windows: Sequence[Window],
                       context: str, n: int, max_answer_len: int) -> list:
    """Greedy extractive fallback for multi spoilers: the top n distinct,
    non-overlapping spans by score across all windows.

    Overlap is judged on context character ranges, which also dedupes the
    same span seen through two overlapping windows.  May return fewer than
    n spans when candidates run out.
    """
    by_index = {s.window_index: s for s in sheets}
    candidates = []
    for w in windows:
        sheet = by_index[w.window_index]
        for neg_score, i, j in top_spans_in_window(sheet, w, max_answer_len):
            candidates.append((neg_score, w.window_index, i, j, w, sheet))
    candidates.sort(key=lambda c: c[:4])

    chosen = []
    taken_ranges = []
    taken_texts = set()
    for neg_score, w_idx, i, j, w, sheet in candidates:
        if len(chosen) >= n:
            break
        char_lo, char_hi = w.offsets[i][0], w.offsets[j][1]
        if any(char_lo < hi and lo < char_hi for lo, hi in taken_ranges):
            continue
        text = recover_text(w, (i, j), context)
        if text in taken_texts:
            continue
        taken_ranges.append((char_lo, char_hi))
        taken_texts.add(text)
        chosen.append(SpanPrediction(
            post_id=w.post_id, task=w.task, window_index=w_idx,
            start_token=i, end_token=j, score=-neg_score, text=text,
            nll=span_nll(sheet, i, j)))
    return chosen


def max_answer_len_for(spoiler_type) -> int:
    """Per-type answer-length cap (phrase 30, passage 150, multi 30 per span)."""
    from .corpus import SpoilerType

    if spoiler_type is SpoilerType.PASSAGE:
        return MAX_ANSWER_LEN_PASSAGE
    if spoiler_type is SpoilerType.MULTI:
        return MAX_ANSWER_LEN_MULTI
    return MAX_ANSWER_LEN_PHRASE
