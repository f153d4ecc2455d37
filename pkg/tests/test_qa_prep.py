"""Tokenizer contract, window tiling, answer alignment, and task prep."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spoilkit.corpus import SpoilerPosition, SpoilerType
from spoilkit.qa_prep import (CLS_ID, SEP_ID, AlignedAnswer, ReferenceTokenizer,
                              VocabTokenizer, Window, align_answer,
                              flatten_paragraphs, head_truncate, make_windows,
                              prepare_task_inputs, rebase_position,
                              tokenize_with_offsets)
from spoilkit.span_select import recover_text


def oracle_tiler(n_ctx, capacity, stride):
    """Independent enumeration of window (start, end) tiles."""
    if n_ctx == 0:
        return [(0, 0)]
    tiles = []
    start = 0
    while True:
        end = min(start + capacity, n_ctx)
        tiles.append((start, end))
        if end >= n_ctx:
            return tiles
        start += capacity - stride


class TestReferenceTokenizer:
    def test_punctuation_splits_off(self):
        assert tokenize_with_offsets("Hi there.") == [
            ("hi", 0, 2), ("there", 3, 8), (".", 8, 9)]

    def test_empty_string(self):
        assert tokenize_with_offsets("") == []

    def test_mixed_punctuation_and_digits(self):
        tokens = [t.text for t in tokenize_with_offsets("It's $212,000!")]
        assert tokens == ["it", "'", "s", "$", "212", ",", "000", "!"]

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=80))
    def test_offsets_reproduce_tokens(self, text):
        tokens = tokenize_with_offsets(text)
        prev_end = 0
        for tok, start, end in tokens:
            assert 0 <= start < end <= len(text)
            assert start >= prev_end  # non-overlapping, monotonic
            assert text[start:end].lower() == tok
            prev_end = end


class TestVocabTokenizer:
    def test_greedy_longest_match(self, tmp_path):
        vocab = tmp_path / "vocab.txt"
        vocab.write_text("un\nbreak\nable\nunbreak\n", encoding="utf-8")
        tok = VocabTokenizer(vocab)
        tokens = tok.tokenize("unbreakable")
        assert [t.text for t in tokens] == ["unbreak", "able"]
        assert tokens[0].start == 0 and tokens[1].end == 11

    def test_unknown_chars_become_single_tokens(self, tmp_path):
        vocab = tmp_path / "vocab.txt"
        vocab.write_text("ab\n", encoding="utf-8")
        tok = VocabTokenizer(vocab)
        assert [t.text for t in tok.tokenize("ab zq")] == ["ab", "z", "q"]

    def test_ids_follow_line_order(self, tmp_path):
        vocab = tmp_path / "vocab.txt"
        vocab.write_text("aa\nbb\n", encoding="utf-8")
        tok = VocabTokenizer(vocab)
        assert tok.token_id("aa") + 1 == tok.token_id("bb")

    def test_empty_vocab_rejected(self, tmp_path):
        vocab = tmp_path / "vocab.txt"
        vocab.write_text("\n")
        with pytest.raises(ValueError):
            VocabTokenizer(vocab)


class TestMakeWindows:
    def test_short_context_yields_one_window_covering_all(self):
        windows = make_windows("why", "a short context", 384, 128)
        assert len(windows) == 1
        assert windows[0].context_char_span == (0, len("a short context"))
        assert windows[0].token_ids[0] == CLS_ID
        assert windows[0].token_ids.count(SEP_ID) == 2

    def test_window_count_matches_brute_force_tiler(self):
        question = " ".join(f"q{i}" for i in range(20))
        context = " ".join(f"w{i}" for i in range(900))
        windows = make_windows(question, context, 384, 128)
        capacity = 384 - 20 - 3
        assert len(windows) == len(oracle_tiler(900, capacity, 128))

    def test_consecutive_windows_overlap_exactly_stride_tokens(self):
        context = " ".join(f"w{i}" for i in range(900))
        windows = make_windows("q", context, 384, 128)
        assert len(windows) > 1
        for a, b in zip(windows, windows[1:]):
            ctx_a = {off for off in a.offsets if off is not None}
            ctx_b = {off for off in b.offsets if off is not None}
            assert len(ctx_a & ctx_b) == 128

    def test_question_too_long_raises(self):
        question = " ".join(f"q{i}" for i in range(400))
        with pytest.raises(ValueError, match="question too long"):
            make_windows(question, "ctx", 384, 128)

    def test_bad_stride_raises(self):
        with pytest.raises(ValueError, match="stride"):
            make_windows("q", "a b c", 10, 9)  # capacity 6, stride must be < 6
        with pytest.raises(ValueError, match="stride"):
            make_windows("q", "a b c", 10, 0)

    def test_layout_is_cls_question_sep_context_sep(self):
        windows = make_windows("one two", "alpha beta", 384, 128)
        w = windows[0]
        assert w.offsets[0] is None                      # CLS
        assert w.offsets[1] is None and w.offsets[2] is None  # question
        assert w.offsets[3] is None                      # SEP
        assert w.offsets[4] == (0, 5) and w.offsets[5] == (6, 10)
        assert w.offsets[6] is None                      # trailing SEP

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 400), st.integers(1, 8))
    def test_coverage_union_is_exact(self, n_ctx, q_len):
        question = " ".join("q" * q_len)
        context = " ".join(f"w{i}" for i in range(n_ctx))
        windows = make_windows(question, context, 64, 16)
        assert windows[0].context_char_span[0] == 0
        assert windows[-1].context_char_span[1] == len(context)
        for a, b in zip(windows, windows[1:]):
            assert b.context_char_span[0] <= a.context_char_span[1]  # no gaps

    def test_empty_context_gets_one_empty_window(self):
        windows = make_windows("q", "", 384, 128)
        assert len(windows) == 1
        assert windows[0].context_token_range() is None
        assert windows[0].context_char_span == (0, 0)


def window_over(context, question="q", max_len=384, stride=128):
    return make_windows(question, context, max_len, stride)


class TestAlignAnswer:
    def test_answer_inside_window_covers_exactly(self):
        context = "the quick brown fox jumps over the lazy dog"
        w = window_over(context)[0]
        span = (context.index("brown"), context.index("fox") + 3)
        aligned = align_answer(w, span, SpoilerType.PHRASE)
        assert aligned is not None
        assert recover_text(w, (aligned.start_token, aligned.end_token), context) == "brown fox"

    def test_phrase_outside_window_is_no_answer(self):
        context = " ".join(f"w{i}" for i in range(300))
        windows = make_windows("q", context, 64, 16)
        assert len(windows) >= 2
        late_span = (len(context) - 10, len(context))
        assert align_answer(windows[0], late_span, SpoilerType.PHRASE) is None

    def test_phrase_straddling_boundary_is_no_answer_in_both(self):
        context = " ".join(f"w{i:03d}" for i in range(300))
        windows = make_windows("q", context, 64, 16)
        w0_end = windows[0].context_char_span[1]
        span = (w0_end - 8, w0_end + 8)
        assert align_answer(windows[0], span, SpoilerType.PHRASE) is None
        # but it is fully inside the overlapping successor
        assert any(align_answer(w, span, SpoilerType.PHRASE) for w in windows[1:])

    def test_passage_majority_overlap_clamps_to_window(self):
        context = " ".join(f"w{i:03d}" for i in range(300))
        windows = make_windows("q", context, 64, 16)
        w = windows[0]
        w_lo, w_hi = w.context_char_span
        inside = int(0.6 * 100)
        span = (w_hi - inside, w_hi - inside + 100)  # 60% inside
        aligned = align_answer(w, span, SpoilerType.PASSAGE)
        assert aligned is not None
        # char-cover oracle: clamp then take covering tokens
        clamped = (max(span[0], w_lo), min(span[1], w_hi))
        ctx_offsets = [o for o in w.offsets if o is not None]
        want_start = next(o for o in ctx_offsets if o[1] > clamped[0])
        want_end = next(o for o in reversed(ctx_offsets) if o[0] < clamped[1])
        got = recover_text(w, (aligned.start_token, aligned.end_token), context)
        assert got == context[want_start[0]:want_end[1]]

    def test_passage_minority_overlap_is_no_answer(self):
        context = " ".join(f"w{i:03d}" for i in range(300))
        w = make_windows("q", context, 64, 16)[0]
        w_hi = w.context_char_span[1]
        span = (w_hi - 20, w_hi + 80)  # 20% inside
        assert align_answer(w, span, SpoilerType.PASSAGE) is None

    def test_empty_answer_span_rejected(self):
        w = window_over("some context")[0]
        with pytest.raises(ValueError):
            align_answer(w, (3, 3), SpoilerType.PHRASE)


class TestPrepareTaskInputs:
    def test_single_paragraph_unreduced_covers_full_text(self, corpus20):
        post = corpus20.posts[0]
        prep = prepare_task_inputs(post)
        assert prep.orig_context == " ".join(post.paragraphs)
        assert prep.orig_windows[0].context_char_span[0] == 0
        assert prep.orig_windows[-1].context_char_span[1] == len(prep.orig_context)

    def test_aux_stream_present_iff_aux_question(self, corpus20):
        with_aux = next(p for p in corpus20.posts if p.aux_question)
        without = next(p for p in corpus20.posts if not p.aux_question)
        assert prepare_task_inputs(with_aux).aux_windows
        assert not prepare_task_inputs(without).aux_windows

    def test_require_aux_raises_when_missing(self, corpus20):
        post = next(p for p in corpus20.posts if not p.aux_question)
        with pytest.raises(ValueError, match="auxQuestion"):
            prepare_task_inputs(post, require_aux=True)

    def test_reduction_rebases_through_boundary_map(self):
        from spoilkit.retrieval import ReducedContext

        paragraphs = ("alpha bravo", "charlie delta", "echo foxtrot")
        from spoilkit.corpus import ClickbaitPost
        post = ClickbaitPost(
            id="p", title_text="echo", paragraphs=paragraphs,
            gold_spoilers=("echo",), positions=(SpoilerPosition(2, 0, 2, 4),),
            spoiler_type=SpoilerType.PHRASE)
        reduced = ReducedContext(post_id="p", kept_indices=(0, 2),
                                 paragraphs=(paragraphs[0], paragraphs[2]), k=2)
        prep = prepare_task_inputs(post, reduced)
        assert prep.orig_context == "alpha bravo echo foxtrot"
        # independent re-base: flat offset of paragraph 2 is len(p0) + 1
        flat_start = len(paragraphs[0]) + 1
        assert prep.orig_gold_spans == ((flat_start, flat_start + 4),)
        assert prep.orig_context[flat_start:flat_start + 4] == "echo"

    def test_position_dropped_when_paragraph_not_kept(self):
        pos = SpoilerPosition(1, 0, 1, 5)
        assert rebase_position(pos, [0], kept_indices=(0,)) is None
        assert rebase_position(pos, [0, 10], kept_indices=(0, 1)) == (10, 15)

    def test_cross_paragraph_position_needs_all_paragraphs(self):
        pos = SpoilerPosition(0, 5, 2, 3)
        assert rebase_position(pos, [0, 10], kept_indices=(0, 2)) is None

    def test_rebased_extraction_equals_gold_when_kept(self, corpus20):
        # whenever all of a position's paragraphs survive, the flat slice
        # must reproduce the stored spoiler
        for post in corpus20.posts:
            context, starts = flatten_paragraphs(post.paragraphs)
            for text, pos in zip(post.gold_spoilers, post.positions):
                span = rebase_position(pos, starts)
                assert context[span[0]:span[1]] == text

    def test_every_contained_gold_aligns_and_round_trips(self, corpus20):
        for post in corpus20.posts:
            prep = prepare_task_inputs(post)
            for span, text in zip(prep.orig_gold_spans, post.gold_spoilers):
                hits = 0
                for w in prep.orig_windows:
                    w_lo, w_hi = w.context_char_span
                    if span[0] >= w_lo and span[1] <= w_hi:
                        aligned = align_answer(w, span, SpoilerType.PHRASE)
                        assert aligned is not None
                        got = recover_text(
                            w, (aligned.start_token, aligned.end_token), prep.orig_context)
                        assert got == text
                        hits += 1
                assert hits >= 1, (post.id, text)

    def test_windows_are_deterministic(self, corpus20):
        post = corpus20.posts[7]
        assert prepare_task_inputs(post) == prepare_task_inputs(post)


class TestWindowRecord:
    def test_no_answer_serializes_as_cls_span(self):
        w = window_over("some words here")[0]
        rec = w.to_record()
        assert rec["is_no_answer"] is True
        assert rec["answer_span"] == [0, 0]
        assert rec["token_count"] == len(w.token_ids)
        assert rec["token_ids"] == list(w.token_ids)

    def test_answer_span_must_point_at_context(self):
        w = window_over("some words here")[0]
        with pytest.raises(ValueError):
            Window(post_id="p", task="orig", window_index=0,
                   token_ids=w.token_ids, offsets=w.offsets,
                   context_char_span=w.context_char_span,
                   answer_span=(0, 1), is_no_answer=False)

    def test_aligned_answer_validates_order(self):
        with pytest.raises(ValueError):
            AlignedAnswer(5, 3)


class TestHeadTruncate:
    def test_short_text_unchanged(self):
        assert head_truncate("a b c", 10) == "a b c"

    def test_cuts_after_max_tokens(self):
        text = " ".join(f"w{i}" for i in range(600))
        cut = head_truncate(text, 512)
        assert len(tokenize_with_offsets(cut)) == 512
        assert text.startswith(cut)
