"""Pluggable logit providers.

A scorer turns a window into start/end logit vectors (generation path) and
a classification input string into a 3-logit vector (classification path).
Three providers ship here:

  StubScorer    deterministic hash-derived logits for tests and dry runs;
                the teacher option boosts gold answer positions by +10 so
                gold-aligned windows become recoverable by construction.
  FileScorer    replays logits from a JSONL file produced offline.
  BridgeScorer  client for an external inference process speaking
                newline-delimited JSON on its standard streams.

Normative file format (UTF-8, one compact JSON object per line):
  span sheet:      {"post_id", "task", "window_index",
                    "start_logits": [...], "end_logits": [...]}
  classification:  {"post_id", "logits": [a, b, c]}

Normative bridge wire protocol (same framing, request/response correlated
by integer id; one response line per request line):
  -> {"id": 1, "kind": "span", "post_id": "...", "task": "orig",
      "window_index": 0, "token_ids": [...]}
  <- {"id": 1, "start_logits": [...], "end_logits": [...]}
  -> {"id": 2, "kind": "classify", "post_id": "...", "text": "..."}
  <- {"id": 2, "logits": [a, b, c]}
  <- {"id": n, "error": "message"}        (provider-side failure)
"""

from __future__ import annotations

import hashlib
import json
import shlex
import subprocess
import threading
from pathlib import Path
from queue import Empty, Queue
from typing import Optional, Protocol, Sequence, Union

import numpy as np

from .corpus import SpoilerType
from .mtl_math import softmax
from .qa_prep import Window
from .span_select import LogitSheet

DEFAULT_BRIDGE_TIMEOUT = 120.0


class ScorerError(Exception):
    """A provider failed or returned malformed output."""


class TransportError(ScorerError):
    """The bridge process died, timed out, or broke framing."""


class Scorer(Protocol):
    def span_logits(self, window: Window) -> tuple: ...

    def class_logits(self, text: str, post_id: str = "") -> Sequence[float]: ...


def score_window(scorer: Scorer, window: Window) -> LogitSheet:
    """LogitSheet for a window; provider output is length-checked before use."""
    start, end = scorer.span_logits(window)
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    n = len(window.token_ids)
    if start.shape != (n,) or end.shape != (n,):
        raise ScorerError(
            f"scorer returned {start.shape[0]}/{end.shape[0]} logits for a "
            f"{n}-token window ({window.post_id}/{window.task}/{window.window_index})")
    return LogitSheet(post_id=window.post_id, task=window.task,
                      window_index=window.window_index,
                      start_logits=start, end_logits=end)


def classify(scorer: Scorer, text: str, post_id: str = "") -> tuple:
    """Class probabilities and predicted type; argmax ties go to the lower code."""
    logits = np.asarray(scorer.class_logits(text, post_id=post_id), dtype=np.float64)
    if logits.shape != (3,):
        raise ScorerError(f"classification scorer returned shape {logits.shape}, need (3,)")
    probs = softmax(logits)
    return probs, SpoilerType(int(np.argmax(probs)))


def _hash_unit(*parts) -> float:
    """Deterministic float in [0, 1) from the blake2b hash of the parts."""
    h = hashlib.blake2b("\x1f".join(str(p) for p in parts).encode("utf-8"),
                        digest_size=8)
    return int.from_bytes(h.digest(), "big") / 2.0**64


class StubScorer:
    """Hash-derived deterministic logits in [-4, 4).

    In teacher mode the window's gold answer positions (the CLS position
    for no-answer windows) get +10, which puts them strictly above any
    noise logit.
    """

    def __init__(self, seed: int = 0, teacher: bool = False):
        self.seed = seed
        self.teacher = teacher

    def _noise(self, tag: str, position: int, token_id: int) -> float:
        return _hash_unit(self.seed, tag, position, token_id) * 8.0 - 4.0

    def span_logits(self, window: Window) -> tuple:
        ids = window.token_ids
        start = np.array([self._noise("s", p, t) for p, t in enumerate(ids)])
        end = np.array([self._noise("e", p, t) for p, t in enumerate(ids)])
        if self.teacher:
            s, e = window.answer_span if window.answer_span is not None else (0, 0)
            start[s] += 10.0
            end[e] += 10.0
        return start, end

    def class_logits(self, text: str, post_id: str = "") -> list:
        return [_hash_unit(self.seed, "c", i, text) * 8.0 - 4.0 for i in range(3)]


class FileScorer:
    """Replays a logits JSONL file; safe for concurrent reads after load."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._sheets = {}
        self._class = {}
        with self.path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ScorerError(f"{self.path}:{line_no}: malformed JSON: {exc}")
                if "start_logits" in rec:
                    key = (rec["post_id"], rec["task"], rec["window_index"])
                    self._sheets[key] = (rec["start_logits"], rec["end_logits"])
                elif "logits" in rec:
                    self._class[rec["post_id"]] = rec["logits"]
                else:
                    raise ScorerError(f"{self.path}:{line_no}: not a logit record")

    def span_logits(self, window: Window) -> tuple:
        key = (window.post_id, window.task, window.window_index)
        try:
            start, end = self._sheets[key]
        except KeyError:
            raise ScorerError(f"no logits on file for window {key}") from None
        return start, end

    def class_logits(self, text: str, post_id: str = "") -> Sequence[float]:
        try:
            return self._class[post_id]
        except KeyError:
            raise ScorerError(f"no classification logits on file for post "
                              f"{post_id!r}") from None


class BridgeScorer:
    """Client for an external scorer process (see module docstring for the
    wire protocol).  Requests are serialized per connection; callers that
    need parallelism open several bridge sessions."""

    def __init__(self, command: Union[str, Sequence[str]],
                 timeout: float = DEFAULT_BRIDGE_TIMEOUT):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None
        self._lines: Queue = Queue()
        self._lock = threading.Lock()
        self._next_id = 0

    def _ensure_started(self):
        if self._proc is not None and self._proc.poll() is None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise TransportError(f"cannot start bridge {self.command!r}: {exc}")
        reader = threading.Thread(target=self._pump, args=(self._proc.stdout,),
                                  daemon=True)
        reader.start()

    def _pump(self, stream):
        for line in stream:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _roundtrip(self, request: dict) -> dict:
        with self._lock:
            self._ensure_started()
            self._next_id += 1
            request["id"] = self._next_id
            try:
                self._proc.stdin.write(json.dumps(request, separators=(",", ":")) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise TransportError(f"bridge stdin closed: {exc}")
            try:
                line = self._lines.get(timeout=self.timeout)
            except Empty:
                raise TransportError(f"bridge response timed out after {self.timeout}s")
            if line is None:
                raise TransportError("bridge closed its stdout")
            try:
                response = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TransportError(f"bridge sent a non-JSON line: {exc}")
            if response.get("id") != request["id"]:
                raise TransportError(
                    f"bridge response id {response.get('id')} does not match "
                    f"request id {request['id']}")
            if "error" in response:
                raise ScorerError(f"bridge error: {response['error']}")
            return response

    def span_logits(self, window: Window) -> tuple:
        response = self._roundtrip({
            "kind": "span",
            "post_id": window.post_id,
            "task": window.task,
            "window_index": window.window_index,
            "token_ids": list(window.token_ids),
        })
        try:
            return response["start_logits"], response["end_logits"]
        except KeyError as exc:
            raise TransportError(f"bridge span response missing {exc}")

    def class_logits(self, text: str, post_id: str = "") -> Sequence[float]:
        response = self._roundtrip({"kind": "classify", "post_id": post_id, "text": text})
        try:
            return response["logits"]
        except KeyError as exc:
            raise TransportError(f"bridge classify response missing {exc}")

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_scorer(spec: str):
    """Scorer from a spec string: stub:SEED[:teacher] | file:PATH | bridge:CMD."""
    kind, _, rest = spec.partition(":")
    if kind == "stub":
        seed_part, _, flag = rest.partition(":")
        try:
            seed = int(seed_part or "0")
        except ValueError:
            raise ValueError(f"bad stub seed in scorer spec {spec!r}")
        if flag not in ("", "teacher"):
            raise ValueError(f"unknown stub option {flag!r} in scorer spec {spec!r}")
        return StubScorer(seed=seed, teacher=flag == "teacher")
    if kind == "file":
        if not rest:
            raise ValueError("file scorer needs a path: file:PATH")
        return FileScorer(rest)
    if kind == "bridge":
        if not rest:
            raise ValueError("bridge scorer needs a command: bridge:CMD")
        return BridgeScorer(rest)
    raise ValueError(f"unknown scorer spec {spec!r} (expected stub:|file:|bridge:)")
