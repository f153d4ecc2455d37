"""BERTScore-style similarity without pretrained weights.

Token embeddings are deterministic hashed character-n-gram vectors; the
score is the usual greedy-matching precision/recall F1 over the cosine
similarity matrix.  Identical strings score exactly 1.0 and unrelated
strings score lower, which is all the desk-scale substitute promises.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .questions import simple_tokenize
from .schemas import read_corpus_records, read_jsonl, write_jsonl

EMBED_DIM = 256
_NGRAM_SIZES = (3, 4, 5)


def _token_vector(token: str) -> np.ndarray:
    vec = np.zeros(EMBED_DIM)
    padded = f"#{token}#"
    grams = [padded]
    for n in _NGRAM_SIZES:
        grams.extend(padded[i:i + n] for i in range(max(0, len(padded) - n + 1)))
    for gram in grams:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=4).digest()
        bucket = int.from_bytes(digest, "big")
        vec[bucket % EMBED_DIM] += 1.0 if (bucket >> 31) & 1 else -1.0
    norm = np.linalg.norm(vec)
    return vec / norm if norm else vec


def _embed(tokens) -> np.ndarray:
    return np.stack([_token_vector(t) for t in tokens])


def pair_score(candidate: str, reference: str) -> float:
    """Greedy-match F1 over token cosine similarities, in [0, 1]."""
    cand = simple_tokenize(candidate)
    ref = simple_tokenize(reference)
    if not cand or not ref:
        return 1.0 if cand == ref else 0.0
    sim = _embed(cand) @ _embed(ref).T
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def score_predictions(pred_path, gold_path, out_path) -> dict:
    """Per-post scores plus the mean; gold references join multi spoilers
    with single spaces, mirroring the evaluation convention."""
    gold = {}
    for rec in read_corpus_records(gold_path):
        spoilers = rec.get("spoiler") or []
        gold[rec["uuid"]] = " ".join(spoilers)
    records = []
    total = 0.0
    for rec in read_jsonl(pred_path):
        post_id = rec["post_id"]
        if post_id not in gold:
            raise ValueError(f"prediction {post_id!r} has no gold record")
        score = pair_score(rec["text"], gold[post_id])
        records.append({"post_id": post_id, "bert_score": score})
        total += score
    if not records:
        raise ValueError("no predictions to score")
    write_jsonl(out_path, records)
    return {"n": len(records), "mean": total / len(records)}


def merge_into_report(report_path, mean_score: float) -> None:
    """Fill the optional bert_score field of an evaluation report JSON."""
    path = Path(report_path)
    report = json.loads(path.read_text(encoding="utf-8"))
    report["bert_score"] = mean_score
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")
