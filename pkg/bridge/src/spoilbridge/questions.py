"""Rule-based auxiliary question generation.

Stands in for a neural question generator at desk scale: the title is
rewritten into a wh-question with a small set of lead-in rules.  The
output schema is a corpus copy with `auxQuestion` filled in, directly
consumable by the pipeline.
"""

from __future__ import annotations

import re

from .schemas import read_corpus_records, write_jsonl

_LEAD_INS = (
    "you won't believe", "you wont believe", "here's", "here is", "this is",
    "the real reason", "the one", "what actually happens",
)

_WH_BY_CUE = (
    (("why", "reason", "because"), "why"),
    (("how", "ways", "steps"), "how"),
    (("where", "place", "country", "city"), "where"),
    (("who", "person", "people"), "who"),
)


def simple_tokenize(text: str) -> list:
    """Lowercase word/punctuation split shared by the bridge models."""
    return re.findall(r"[^\W_]+|[^\w\s]", text.lower(), re.UNICODE)


def aux_question(title: str) -> str:
    """A deterministic wh-question derived from the post title."""
    body = title.strip().rstrip("!.?").lower()
    for lead in _LEAD_INS:
        if body.startswith(lead):
            body = body[len(lead):].strip(" ,:-")
            break
    wh = "what"
    for cues, word in _WH_BY_CUE:
        if any(cue in body.split() for cue in cues):
            wh = word
            break
    if body.startswith(wh):
        question = body
    else:
        question = f"{wh} is behind {body}" if wh == "what" else f"{wh} {body}"
    return question.strip() + "?"


def add_aux_questions(corpus_path, out_path, overwrite: bool = False) -> int:
    """Copy a corpus file, filling auxQuestion where absent."""
    records = read_corpus_records(corpus_path)
    filled = 0
    for rec in records:
        if overwrite or not rec.get("auxQuestion"):
            rec["auxQuestion"] = aux_question(rec["targetTitle"])
            filled += 1
    write_jsonl(out_path, records)
    return filled
