"""Stdio scorer server: newline-delimited JSON requests on stdin, one
response per line on stdout, correlated by id.

Span requests carry token ids and get start/end logit vectors; classify
requests carry text and get a 3-logit vector.  Malformed requests produce
{"id": ..., "error": ...} responses instead of killing the session.
"""

from __future__ import annotations

import json
import sys

import torch

from .infer import class_sheet, span_sheet
from .model import SpanScorer


def handle_request(model: SpanScorer, request: dict) -> dict:
    kind = request.get("kind")
    if kind == "span":
        window = {
            "post_id": request["post_id"],
            "task": request["task"],
            "window_index": request["window_index"],
            "token_ids": request["token_ids"],
        }
        sheet = span_sheet(model, window)
        return {"id": request["id"],
                "start_logits": sheet["start_logits"],
                "end_logits": sheet["end_logits"]}
    if kind == "classify":
        sheet = class_sheet(model, request.get("post_id", ""), request["text"])
        return {"id": request["id"], "logits": sheet["logits"]}
    raise ValueError(f"unknown request kind {kind!r}")


def serve(model: SpanScorer, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    torch.set_num_threads(1)
    for line in stdin:
        if not line.strip():
            continue
        request_id = None
        try:
            request = json.loads(line)
            request_id = request.get("id")
            response = handle_request(model, request)
        except Exception as exc:
            response = {"id": request_id, "error": str(exc)}
        stdout.write(json.dumps(response, separators=(",", ":")) + "\n")
        stdout.flush()
