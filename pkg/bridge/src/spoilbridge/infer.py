"""Batch inference: windows JSONL in, logit sheets JSONL out.

Windows are scored one at a time (no padding) so that offline output is
float-identical to live serving of the same checkpoint.  With a corpus
file, 3-way classification records are appended; in abstractive mode the
generator model emits text records flagged "abstractive": true instead of
logits.
"""

from __future__ import annotations

import torch

from .model import SpanScorer
from .questions import simple_tokenize
from .schemas import read_corpus_records, read_windows, validate_logit_record, write_jsonl


def span_sheet(model: SpanScorer, window: dict) -> dict:
    with torch.no_grad():
        ids = model.bucket(window["token_ids"]).unsqueeze(0)
        start, end = model(ids)
    return {
        "post_id": window["post_id"],
        "task": window["task"],
        "window_index": window["window_index"],
        "start_logits": [float(v) for v in start[0]],
        "end_logits": [float(v) for v in end[0]],
    }


def class_sheet(model: SpanScorer, post_id: str, text: str) -> dict:
    tokens = simple_tokenize(text) or ["empty"]
    bucketed = model.bucket([_token_bucket_id(t) for t in tokens]).unsqueeze(0)
    with torch.no_grad():
        logits = model.classify(bucketed)
    return {"post_id": post_id, "logits": [float(v) for v in logits[0]]}


def _token_bucket_id(token: str) -> int:
    import hashlib

    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % (2**31)


def classification_text(record: dict) -> str:
    return record["targetTitle"] + " [SEP] " + " ".join(record["targetParagraphs"])


def batch_infer(model: SpanScorer, windows_path, out_path,
                corpus_path=None) -> int:
    """Score every window (and, with a corpus, every post) to JSONL."""
    torch.set_num_threads(1)
    records = []
    for window in read_windows(windows_path):
        records.append(validate_logit_record(span_sheet(model, window)))
    if corpus_path is not None:
        for rec in read_corpus_records(corpus_path):
            records.append(validate_logit_record(
                class_sheet(model, rec["uuid"], classification_text(rec))))
    write_jsonl(out_path, records)
    return len(records)


def abstractive_infer(generator, windows_path, out_path, corpus_path) -> int:
    """Generate text per post with the sequence-to-sequence model."""
    from .seq2seq import generate_spoiler

    torch.set_num_threads(1)
    post_ids = []
    seen = set()
    for window in read_windows(windows_path):
        if window["post_id"] not in seen:
            seen.add(window["post_id"])
            post_ids.append(window["post_id"])
    by_id = {rec["uuid"]: rec for rec in read_corpus_records(corpus_path)}
    records = []
    for post_id in post_ids:
        rec = by_id.get(post_id)
        if rec is None:
            continue
        text = generate_spoiler(generator, rec["targetTitle"],
                                rec["targetParagraphs"])
        records.append({"post_id": post_id, "text": text, "abstractive": True})
    write_jsonl(out_path, records)
    return len(records)
