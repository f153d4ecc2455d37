"""The file schemas and wire records shared with the pipeline package.

The bridge talks to the pipeline exclusively through these formats:
windows JSONL in, logit-sheet JSONL out, plus the newline-delimited JSON
request/response protocol on stdin/stdout.  Everything is UTF-8, one
compact JSON object per line.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator, Union


class SchemaError(ValueError):
    """A record does not match the shared schema."""


def _require(record: dict, field: str, types) -> None:
    if field not in record:
        raise SchemaError(f"missing field {field!r}")
    if not isinstance(record[field], types):
        raise SchemaError(f"field {field!r} has type {type(record[field]).__name__}")


def validate_window(record: dict) -> dict:
    _require(record, "post_id", str)
    _require(record, "task", str)
    if record["task"] not in ("orig", "aux"):
        raise SchemaError(f"unknown task {record['task']!r}")
    _require(record, "window_index", int)
    _require(record, "token_count", int)
    _require(record, "token_ids", list)
    _require(record, "answer_span", list)
    _require(record, "is_no_answer", bool)
    _require(record, "context_char_span", list)
    if len(record["token_ids"]) != record["token_count"]:
        raise SchemaError("token_ids length does not match token_count")
    span = record["answer_span"]
    if len(span) != 2 or span[0] > span[1] or span[0] < 0:
        raise SchemaError(f"bad answer_span {span}")
    if span[1] >= record["token_count"]:
        raise SchemaError("answer_span outside the window")
    return record


def validate_span_sheet(record: dict) -> dict:
    _require(record, "post_id", str)
    _require(record, "task", str)
    _require(record, "window_index", int)
    _require(record, "start_logits", list)
    _require(record, "end_logits", list)
    if len(record["start_logits"]) != len(record["end_logits"]):
        raise SchemaError("start/end logit lengths differ")
    for name in ("start_logits", "end_logits"):
        if not all(isinstance(v, (int, float)) for v in record[name]):
            raise SchemaError(f"{name} must contain numbers")
    return record


def validate_class_sheet(record: dict) -> dict:
    _require(record, "post_id", str)
    _require(record, "logits", list)
    if len(record["logits"]) != 3:
        raise SchemaError(f"classification logits must have length 3, "
                          f"got {len(record['logits'])}")
    return record


def validate_logit_record(record: dict) -> dict:
    """Either a span sheet or a classification record."""
    if "start_logits" in record:
        return validate_span_sheet(record)
    if "logits" in record:
        return validate_class_sheet(record)
    raise SchemaError("neither a span sheet nor a classification record")


def read_jsonl(path: Union[str, Path]) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: malformed JSON: {exc}")


def write_jsonl(path: Union[str, Path], records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False,
                                separators=(",", ":")) + "\n")


def read_windows(path: Union[str, Path]) -> list:
    return [validate_window(rec) for rec in read_jsonl(path)]


def read_corpus_records(path: Union[str, Path]) -> list:
    """Minimal reader for the corpus JSONL schema (uuid, targetTitle,
    targetParagraphs, spoiler, tags, auxQuestion)."""
    records = []
    for rec in read_jsonl(path):
        _require(rec, "uuid", str)
        _require(rec, "targetTitle", str)
        _require(rec, "targetParagraphs", list)
        records.append(rec)
    return records
