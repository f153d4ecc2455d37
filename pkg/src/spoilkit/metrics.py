"""Evaluation suite: sentence-level BLEU-4, a reduced METEOR, accuracy,
and macro F1, reported on the 0-100 scale used for generation metrics.

Both text metrics tokenize with the same contract as the QA reference
tokenizer (lowercase, punctuation split off).  The METEOR here is
deliberately reduced -- exact and stem-match stages only, no synonym
stage -- and is named meteor_reduced in every output to avoid claiming
parity with WordNet METEOR.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

from .corpus import ClickbaitPost, CorpusSplit, SpoilerType
from .qa_prep import ReferenceTokenizer

METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5

_TOKENIZER = ReferenceTokenizer()


def _tokens(text: str) -> list:
    return [t.text for t in _TOKENIZER.tokenize(text)]


def _ngram_counts(tokens: Sequence[str], n: int) -> dict:
    counts = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i:i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu4(hypothesis: str, reference: str) -> float:
    """Sentence-level BLEU with n-grams 1..4, on a 0-100 scale.

    Modified n-gram precisions are clipped against the reference; any zero
    precision gets add-1 smoothing (matches+1)/(total+1) when the
    hypothesis has at least n tokens, and orders the hypothesis is too
    short for are skipped.  Brevity penalty exp(1 - r/c) applies when the
    hypothesis is shorter than the reference.  Hypotheses sharing no
    unigram with the reference score a hard 0, as do empty hypotheses.
    """
    hyp = _tokens(hypothesis)
    ref = _tokens(reference)
    if not hyp or not ref:
        return 0.0

    log_precisions = []
    for n in range(1, 5):
        total = len(hyp) - n + 1
        if total < 1:
            continue  # hypothesis too short for this order
        hyp_counts = _ngram_counts(hyp, n)
        ref_counts = _ngram_counts(ref, n)
        matched = sum(min(c, ref_counts.get(g, 0)) for g, c in hyp_counts.items())
        if n == 1 and matched == 0:
            return 0.0
        if matched == 0:
            precision = (matched + 1) / (total + 1)
        else:
            precision = matched / total
        log_precisions.append(math.log(precision))

    geo_mean = math.exp(sum(log_precisions) / len(log_precisions))
    bp = 1.0 if len(hyp) >= len(ref) else math.exp(1.0 - len(ref) / len(hyp))
    return 100.0 * bp * geo_mean


def stem(token: str) -> str:
    """Suffix-stripping stemmer for the METEOR stem-match stage.

    Strips the first matching suffix of ing/ed/es/ly/s when at least three
    characters remain; words ending in a double s keep their final s.
    """
    for suffix in ("ing", "ed", "es", "ly"):
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    if token.endswith("s") and not token.endswith("ss") and len(token) >= 4:
        return token[:-1]
    return token


def _align(hyp: Sequence[str], ref: Sequence[str]) -> list:
    """Two-stage unigram alignment: exact match, then stem match.

    Within each stage, hypothesis tokens are scanned left to right and
    paired with the leftmost unmatched reference token of equal key; this
    is the normative pairing rule for the reduced metric.  Returns
    (hyp_index, ref_index) pairs sorted by hypothesis index.
    """
    matched_hyp: Dict[int, int] = {}
    used_ref = set()
    for key in (lambda t: t, stem):
        ref_keys = [key(t) for t in ref]
        for i, h in enumerate(hyp):
            if i in matched_hyp:
                continue
            hk = key(h)
            for j, rk in enumerate(ref_keys):
                if j in used_ref or rk != hk:
                    continue
                matched_hyp[i] = j
                used_ref.add(j)
                break
    return sorted(matched_hyp.items())


def _count_chunks(alignment: Sequence[tuple]) -> int:
    chunks = 0
    prev = None
    for hi, rj in alignment:
        if prev is None or hi != prev[0] + 1 or rj != prev[1] + 1:
            chunks += 1
        prev = (hi, rj)
    return chunks


def meteor_reduced(hypothesis: str, reference: str) -> float:
    """Reduced METEOR (exact + stem stages, no synonyms), 0-100 scale.

    F_mean = P*R / (alpha*P + (1-alpha)*R) with alpha = 0.9; fragmentation
    penalty gamma * (chunks/matches)^beta with beta = 3 and gamma = 0.5.
    A single chunk that aligns both strings completely carries no penalty,
    so identical strings score 100.
    """
    hyp = _tokens(hypothesis)
    ref = _tokens(reference)
    if not hyp or not ref:
        return 0.0
    alignment = _align(hyp, ref)
    matches = len(alignment)
    if matches == 0:
        return 0.0
    precision = matches / len(hyp)
    recall = matches / len(ref)
    f_mean = (precision * recall) / (METEOR_ALPHA * precision
                                     + (1.0 - METEOR_ALPHA) * recall)
    chunks = _count_chunks(alignment)
    if chunks == 1 and matches == len(hyp) == len(ref):
        penalty = 0.0  # full both-sided alignment in one chunk
    else:
        penalty = METEOR_GAMMA * (chunks / matches) ** METEOR_BETA
    return 100.0 * f_mean * (1.0 - penalty)


def accuracy(preds: Sequence[SpoilerType], gold: Sequence[SpoilerType]) -> float:
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(gold)} gold")
    if not gold:
        raise ValueError("empty inputs")
    return sum(p == g for p, g in zip(preds, gold)) / len(gold)


def macro_f1(preds: Sequence[SpoilerType], gold: Sequence[SpoilerType]) -> tuple:
    """Unweighted mean F1 over the three classes and the per-class map.

    A class with neither predictions nor gold occurrences contributes 0,
    per the documented convention.
    """
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(gold)} gold")
    per_class = {}
    for cls in SpoilerType:
        tp = sum(1 for p, g in zip(preds, gold) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(preds, gold) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(preds, gold) if p != cls and g == cls)
        denom = 2 * tp + fp + fn
        per_class[cls] = (2 * tp / denom) if denom else 0.0
    macro = sum(per_class.values()) / len(per_class)
    return macro, per_class


@dataclass
class EvalReport:
    """Per-split metric bundle; fields absent from the task stay None."""

    split: str
    n: int
    bleu4: Optional[float] = None
    meteor_reduced: Optional[float] = None
    accuracy: Optional[float] = None
    macro_f1: Optional[float] = None
    per_class_f1: Optional[dict] = None
    bert_score: Optional[float] = None  # filled only by the inference bridge

    def to_dict(self) -> dict:
        out = {"split": self.split, "n": self.n}
        for name in ("bleu4", "meteor_reduced", "accuracy", "macro_f1", "bert_score"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.per_class_f1 is not None:
            out["per_class_f1"] = {cls.tag: f1 for cls, f1 in self.per_class_f1.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_table(self) -> str:
        """Aligned plain-text table, one row per split."""
        if self.accuracy is not None:
            headers = ["Split", "n", "Acc", "F1(macro)"]
            row = [self.split, str(self.n), f"{self.accuracy:.4f}", f"{self.macro_f1:.4f}"]
            if self.per_class_f1:
                for cls in SpoilerType:
                    headers.append(f"F1({cls.tag})")
                    row.append(f"{self.per_class_f1[cls]:.4f}")
        else:
            headers = ["Split", "n", "BLEU-4", "METEOR(reduced)", "BERTScore"]
            row = [self.split, str(self.n),
                   f"{self.bleu4:.2f}" if self.bleu4 is not None else "-",
                   f"{self.meteor_reduced:.2f}" if self.meteor_reduced is not None else "-",
                   f"{self.bert_score:.2f}" if self.bert_score is not None else "-"]
        widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
        head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
        body = "  ".join(v.rjust(w) for v, w in zip(row, widths))
        return head + "\n" + body


class MissingPredictionsError(ValueError):
    def __init__(self, missing_ids):
        self.missing_ids = list(missing_ids)
        shown = ", ".join(self.missing_ids[:10])
        more = "" if len(self.missing_ids) <= 10 else f" (+{len(self.missing_ids) - 10} more)"
        super().__init__(f"{len(self.missing_ids)} gold id(s) missing from "
                         f"predictions: {shown}{more}")


def _load_predictions(preds: Union[str, Path, Iterable[dict]]) -> list:
    if isinstance(preds, (str, Path)):
        records = []
        with open(preds, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(json.loads(line))
        return records
    return list(preds)


def gold_reference(post: ClickbaitPost) -> str:
    """Reference string for generation scoring; multi spoilers join with spaces."""
    return " ".join(post.gold_spoilers)


def evaluate_split(preds: Union[str, Path, Iterable[dict]], gold: CorpusSplit,
                   task: str) -> EvalReport:
    """Aggregate per-sample metrics over one split.

    task "generation" averages sentence-level BLEU-4 and meteor_reduced of
    each prediction's text against the post's gold spoilers; task
    "classification" scores predicted labels.  Every gold id must be
    present in the predictions.
    """
    if task not in ("classification", "generation"):
        raise ValueError(f"task must be classification or generation, got {task!r}")
    if len(gold.posts) == 0:
        raise ValueError("empty gold split")
    records = _load_predictions(preds)
    by_id = {}
    for rec in records:
        by_id[rec["post_id"]] = rec
    missing = [p.id for p in gold.posts if p.id not in by_id]
    if missing:
        raise MissingPredictionsError(missing)

    if task == "classification":
        pred_labels = []
        gold_labels = []
        for post in gold.posts:
            if post.spoiler_type is None:
                raise ValueError(f"post {post.id} has no gold spoiler type")
            pred_labels.append(SpoilerType(by_id[post.id]["label"]))
            gold_labels.append(post.spoiler_type)
        acc = accuracy(pred_labels, gold_labels)
        macro, per_class = macro_f1(pred_labels, gold_labels)
        return EvalReport(split=gold.name, n=len(gold.posts), accuracy=acc,
                          macro_f1=macro, per_class_f1=per_class)

    bleu_total = 0.0
    meteor_total = 0.0
    for post in gold.posts:
        if not post.gold_spoilers:
            raise ValueError(f"post {post.id} has no gold spoilers")
        hyp = by_id[post.id]["text"]
        ref = gold_reference(post)
        bleu_total += bleu4(hyp, ref)
        meteor_total += meteor_reduced(hyp, ref)
    n = len(gold.posts)
    return EvalReport(split=gold.name, n=n, bleu4=bleu_total / n,
                      meteor_reduced=meteor_total / n)


def corpus_bleu4(pairs: Sequence[Tuple[str, str]]) -> float:
    """Corpus-level BLEU-4 (pooled n-gram counts) for comparison runs."""
    if not pairs:
        raise ValueError("no pairs")
    matched = [0] * 4
    totals = [0] * 4
    hyp_len = ref_len = 0
    for hypothesis, reference in pairs:
        hyp = _tokens(hypothesis)
        ref = _tokens(reference)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, 5):
            hyp_counts = _ngram_counts(hyp, n)
            ref_counts = _ngram_counts(ref, n)
            matched[n - 1] += sum(min(c, ref_counts.get(g, 0))
                                  for g, c in hyp_counts.items())
            totals[n - 1] += max(0, len(hyp) - n + 1)
    if hyp_len == 0 or matched[0] == 0:
        return 0.0
    log_precisions = []
    for m, t in zip(matched, totals):
        if t < 1:
            continue
        precision = m / t if m > 0 else 1.0 / (t + 1)
        log_precisions.append(math.log(precision))
    geo_mean = math.exp(sum(log_precisions) / len(log_precisions))
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * geo_mean
