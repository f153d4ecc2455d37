"""Tokenization with character offsets, overlapping window construction,
and gold-answer token alignment for the extractive QA path.

Windows follow the [CLS] question [SEP] context-slice [SEP] layout with a
default capacity of 384 tokens and a 128-token overlap between consecutive
windows.  Question and special tokens carry a null offset; context tokens
carry (char_start, char_end) into the flattened context string.

Phrase answers must fall entirely inside a window; passage answers are
clamped to the window when at least half of their characters are covered.
The classification path does not use windows: its input is head-truncated
to 512 tokens.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

from .corpus import ClickbaitPost, SpoilerPosition, SpoilerType

MAX_WINDOW_TOKENS = 384
DEFAULT_STRIDE = 128
CLASSIFICATION_MAX_TOKENS = 512
PASSAGE_OVERLAP_THRESHOLD = 0.5

TASK_ORIG = "orig"  # question = post title
TASK_AUX = "aux"    # question = auxiliary generated question

PAD_ID, CLS_ID, SEP_ID, UNK_ID = 0, 1, 2, 3
_HASH_ID_BASE = 4
_HASH_ID_SPACE = 2**31 - _HASH_ID_BASE


class Token(NamedTuple):
    text: str   # lowercased surface form
    start: int  # char offset into the source text
    end: int    # exclusive


def hash_token_id(token: str) -> int:
    """Stable vocabulary-free token id (PYTHONHASHSEED-independent)."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return _HASH_ID_BASE + int.from_bytes(digest, "big") % _HASH_ID_SPACE


class ReferenceTokenizer:
    """Built-in tokenizer: lowercase, split on whitespace and punctuation,
    punctuation marks become single-character tokens.

    Offsets are non-overlapping and monotonic; slicing the source text at
    (start, end) and lowercasing re-yields the token.
    """

    def tokenize(self, text: str) -> list:
        out = []
        i, n = 0, len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isalnum():
                j = i + 1
                while j < n and text[j].isalnum():
                    j += 1
                out.append(Token(text[i:j].lower(), i, j))
                i = j
            else:
                out.append(Token(ch.lower(), i, i + 1))
                i += 1
        return out

    def token_id(self, token: str) -> int:
        return hash_token_id(token)


class VocabTokenizer:
    """Plug-in tokenizer from a vocabulary file, one token per line.

    Greedy longest match over the lowercased text; whitespace is skipped
    and any unmatched character becomes a single-character token with the
    UNK id.  Ids are 4 + line index (0..3 are reserved specials).
    """

    def __init__(self, vocab_path):
        self._ids = {}
        with open(vocab_path, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                tok = line.rstrip("\n")
                if tok and tok not in self._ids:
                    self._ids[tok] = _HASH_ID_BASE + i
        if not self._ids:
            raise ValueError(f"empty vocabulary file: {vocab_path}")
        self._max_len = max(len(t) for t in self._ids)

    def tokenize(self, text: str) -> list:
        out = []
        low = text.lower()
        i, n = 0, len(low)
        while i < n:
            if text[i].isspace():
                i += 1
                continue
            match_end = 0
            for j in range(min(n, i + self._max_len), i, -1):
                if low[i:j] in self._ids:
                    match_end = j
                    break
            if match_end:
                out.append(Token(low[i:match_end], i, match_end))
                i = match_end
            else:
                out.append(Token(low[i], i, i + 1))
                i += 1
        return out

    def token_id(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)


_DEFAULT_TOKENIZER = ReferenceTokenizer()


def tokenize_with_offsets(text: str, tokenizer=None) -> list:
    """Ordered (token, char_start, char_end) triples for a text."""
    return (tokenizer or _DEFAULT_TOKENIZER).tokenize(text)


@dataclass(frozen=True)
class AlignedAnswer:
    """Inclusive token-index range of a gold answer inside one window."""

    start_token: int
    end_token: int

    def __post_init__(self):
        if self.start_token > self.end_token:
            raise ValueError(f"inverted answer span ({self.start_token}, {self.end_token})")


@dataclass(frozen=True)
class Window:
    """One tokenized QA window.

    answer_span is None for windows that do not contain a gold answer
    (is_no_answer True); the serialized form encodes that case as the CLS
    position [0, 0].
    """

    post_id: str
    task: str
    window_index: int
    token_ids: tuple
    offsets: tuple  # per token: (char_start, char_end) or None
    context_char_span: tuple
    answer_span: Optional[tuple] = None
    is_no_answer: bool = True

    def __post_init__(self):
        if self.answer_span is not None:
            s, e = self.answer_span
            if s > e:
                raise ValueError(f"inverted answer span {self.answer_span}")
            if self.is_no_answer:
                raise ValueError("answer_span present on a no-answer window")
            if self.offsets[s] is None or self.offsets[e] is None:
                raise ValueError("answer span must point at context tokens")

    def __len__(self) -> int:
        return len(self.token_ids)

    def context_token_range(self) -> Optional[tuple]:
        """Inclusive (lo, hi) token positions of the context region, or None."""
        lo = hi = None
        for i, off in enumerate(self.offsets):
            if off is not None:
                if lo is None:
                    lo = i
                hi = i
        return None if lo is None else (lo, hi)

    def to_record(self) -> dict:
        span = [0, 0] if self.answer_span is None else list(self.answer_span)
        return {
            "post_id": self.post_id,
            "task": self.task,
            "window_index": self.window_index,
            "token_count": len(self.token_ids),
            "context_char_span": list(self.context_char_span),
            "answer_span": span,
            "is_no_answer": self.is_no_answer,
            "token_ids": list(self.token_ids),
        }


def make_windows(question: str, context: str, max_len: int = MAX_WINDOW_TOKENS,
                 stride: int = DEFAULT_STRIDE, tokenizer=None,
                 post_id: str = "", task: str = TASK_ORIG) -> list:
    """Tile the context with overlapping windows.

    Consecutive windows share exactly `stride` context tokens; the last
    window may be shorter.  The union of context_char_span values covers
    [0, len(context)) exactly.
    """
    tok = tokenizer or _DEFAULT_TOKENIZER
    q_tokens = tok.tokenize(question)
    c_tokens = tok.tokenize(context)
    capacity = max_len - len(q_tokens) - 3
    if capacity < 1:
        raise ValueError(
            f"question too long for max_len: {len(q_tokens)} question tokens "
            f"leave no context capacity at max_len={max_len}")
    if not 0 < stride < capacity:
        raise ValueError(f"stride must be in (0, {capacity}), got {stride}")

    q_ids = [tok.token_id(t.text) for t in q_tokens]
    c_ids = [tok.token_id(t.text) for t in c_tokens]
    n_ctx = len(c_tokens)

    windows = []
    step = capacity - stride
    start = 0
    while True:
        end = min(start + capacity, n_ctx)
        char_lo = 0 if start == 0 else c_tokens[start].start
        char_hi = len(context) if end == n_ctx else c_tokens[end - 1].end
        token_ids = [CLS_ID] + q_ids + [SEP_ID] + c_ids[start:end] + [SEP_ID]
        offsets = ([None] * (len(q_tokens) + 2)
                   + [(t.start, t.end) for t in c_tokens[start:end]]
                   + [None])
        windows.append(Window(
            post_id=post_id,
            task=task,
            window_index=len(windows),
            token_ids=tuple(token_ids),
            offsets=tuple(offsets),
            context_char_span=(char_lo, char_hi),
        ))
        if end >= n_ctx:
            break
        start += step
    return windows


def align_answer(window: Window, answer_char_span: tuple,
                 spoiler_type: SpoilerType,
                 passage_threshold: float = PASSAGE_OVERLAP_THRESHOLD) -> Optional[AlignedAnswer]:
    """Token alignment of a gold answer within one window, or None.

    Phrase (and multi) answers must be fully contained in the window's
    character span.  Passage answers are kept when at least
    `passage_threshold` of their characters fall inside, clamped to the
    window boundary; otherwise the window is a no-answer window.
    """
    a_lo, a_hi = answer_char_span
    if a_lo >= a_hi:
        raise ValueError(f"empty answer span {answer_char_span}")
    w_lo, w_hi = window.context_char_span
    if spoiler_type is SpoilerType.PASSAGE:
        overlap = min(a_hi, w_hi) - max(a_lo, w_lo)
        if overlap <= 0 or overlap / (a_hi - a_lo) < passage_threshold:
            return None
        span_lo, span_hi = max(a_lo, w_lo), min(a_hi, w_hi)
    else:
        if a_lo < w_lo or a_hi > w_hi:
            return None
        span_lo, span_hi = a_lo, a_hi

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
    return AlignedAnswer(start_token=start_tok, end_token=end_tok)


def flatten_paragraphs(paragraphs: Sequence[str]) -> tuple:
    """Join paragraphs with single spaces; returns (context, paragraph starts)."""
    starts = []
    cursor = 0
    for p in paragraphs:
        starts.append(cursor)
        cursor += len(p) + 1  # the joining space
    return " ".join(paragraphs), starts


def rebase_position(pos: SpoilerPosition, para_starts: Sequence[int],
                    kept_indices: Optional[Sequence[int]] = None) -> Optional[tuple]:
    """Character span of a position inside the flattened context.

    With kept_indices (a context reduction), the position survives only
    when every paragraph it touches was kept; otherwise None.  para_starts
    must correspond to the flattened (possibly reduced) paragraph list.
    """
    if kept_indices is None:
        return (para_starts[pos.start_paragraph] + pos.start_char,
                para_starts[pos.end_paragraph] + pos.end_char)
    new_index = {orig: new for new, orig in enumerate(kept_indices)}
    needed = range(pos.start_paragraph, pos.end_paragraph + 1)
    if any(orig not in new_index for orig in needed):
        return None
    return (para_starts[new_index[pos.start_paragraph]] + pos.start_char,
            para_starts[new_index[pos.end_paragraph]] + pos.end_char)


@dataclass(frozen=True)
class PreparedTasks:
    """Windows and flattened contexts for the two QA task streams."""

    orig_windows: tuple
    aux_windows: tuple
    orig_context: str
    aux_context: str
    orig_gold_spans: tuple  # flat char spans of gold answers in orig_context
    aux_gold_spans: tuple


def _attach_answers(windows, gold_spans, spoiler_type, passage_threshold):
    """First gold span that aligns wins; remaining windows stay no-answer."""
    out = []
    for w in windows:
        aligned = None
        for span in gold_spans:
            aligned = align_answer(w, span, spoiler_type, passage_threshold)
            if aligned is not None:
                break
        if aligned is None:
            out.append(w)
        else:
            out.append(replace(w, answer_span=(aligned.start_token, aligned.end_token),
                               is_no_answer=False))
    return out


def prepare_task_inputs(post: ClickbaitPost, reduced=None,
                        max_len: int = MAX_WINDOW_TOKENS,
                        stride: int = DEFAULT_STRIDE,
                        tokenizer=None,
                        passage_threshold: float = PASSAGE_OVERLAP_THRESHOLD,
                        require_aux: bool = False) -> PreparedTasks:
    """Build both task streams for a post.

    The title-text task uses the full paragraph set or, when `reduced` is
    given, the reduced one.  The auxiliary task always uses the full
    paragraph set.  Gold positions are re-based through the paragraph
    boundary map (and through the reduction for the title task); positions
    whose paragraphs were dropped by the reduction yield no aligned answer.
    """
    if require_aux and post.aux_question is None:
        raise ValueError(f"post {post.id}: aux task requested but auxQuestion is missing")

    spoiler_type = post.spoiler_type or SpoilerType.PHRASE

    if reduced is not None:
        orig_paras = reduced.paragraphs
        kept = reduced.kept_indices
    else:
        orig_paras = post.paragraphs
        kept = None
    orig_context, orig_starts = flatten_paragraphs(orig_paras)
    orig_spans = tuple(
        s for s in (rebase_position(p, orig_starts, kept) for p in post.positions)
        if s is not None)
    orig_windows = _attach_answers(
        make_windows(post.title_text, orig_context, max_len, stride, tokenizer,
                     post_id=post.id, task=TASK_ORIG),
        orig_spans, spoiler_type, passage_threshold)

    aux_windows = []
    aux_context = ""
    aux_spans = ()
    if post.aux_question is not None:
        aux_context, aux_starts = flatten_paragraphs(post.paragraphs)
        aux_spans = tuple(rebase_position(p, aux_starts) for p in post.positions)
        aux_windows = _attach_answers(
            make_windows(post.aux_question, aux_context, max_len, stride, tokenizer,
                         post_id=post.id, task=TASK_AUX),
            aux_spans, spoiler_type, passage_threshold)

    return PreparedTasks(
        orig_windows=tuple(orig_windows),
        aux_windows=tuple(aux_windows),
        orig_context=orig_context,
        aux_context=aux_context,
        orig_gold_spans=orig_spans,
        aux_gold_spans=aux_spans,
    )


def head_truncate(text: str, max_tokens: int = CLASSIFICATION_MAX_TOKENS,
                  tokenizer=None) -> str:
    """Classification-path truncation: keep the text of the first max_tokens tokens."""
    tokens = (tokenizer or _DEFAULT_TOKENIZER).tokenize(text)
    if len(tokens) <= max_tokens:
        return text
    return text[: tokens[max_tokens - 1].end]


def dump_windows(windows, path) -> None:
    """Windows as JSONL for the inference bridge and for audits."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for w in windows:
            fh.write(json.dumps(w.to_record(), sort_keys=True, separators=(",", ":")) + "\n")
