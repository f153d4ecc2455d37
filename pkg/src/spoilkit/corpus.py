"""Webis-format clickbait corpus: loading, validation, and addressing.

Records are JSONL, one object per line, with the public-release fields
`uuid`, `targetTitle`, `targetParagraphs`, `spoiler`, `spoilerPositions`,
`tags` and the optional `auxQuestion`.  Character offsets everywhere are
Unicode scalar-value offsets (Python string indices), never bytes.

Validation failures are collected across the whole file and raised in one
CorpusValidationError so an audit sees every problem in a single pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Optional, Union

SPLIT_NAMES = ("train", "validation", "test")

SEP_TOKEN = "[SEP]"


class SpoilerType(IntEnum):
    """The three spoiler categories; integer codes are stable across runs."""

    PHRASE = 0
    PASSAGE = 1
    MULTI = 2

    @classmethod
    def from_tag(cls, tag: str) -> "SpoilerType":
        try:
            return _TAG_TO_TYPE[tag.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown spoiler tag {tag!r}") from None

    @property
    def tag(self) -> str:
        return self.name.lower()


_TAG_TO_TYPE = {"phrase": SpoilerType.PHRASE, "passage": SpoilerType.PASSAGE,
                "multi": SpoilerType.MULTI}


@dataclass(frozen=True)
class SpoilerPosition:
    """Character-level location of one gold spoiler inside the paragraphs.

    end_char is exclusive.  A position may span several paragraphs;
    start_paragraph <= end_paragraph, and when they are equal
    start_char < end_char.
    """

    start_paragraph: int
    start_char: int
    end_paragraph: int
    end_char: int

    def validate(self, paragraphs: tuple) -> None:
        sp, sc, ep, ec = (self.start_paragraph, self.start_char,
                          self.end_paragraph, self.end_char)
        if sp > ep:
            raise ValueError(f"start paragraph {sp} after end paragraph {ep}")
        if not (0 <= sp < len(paragraphs)) or not (0 <= ep < len(paragraphs)):
            raise ValueError(f"paragraph index out of range: [{sp}, {ep}] "
                             f"with {len(paragraphs)} paragraphs")
        if sp == ep and sc >= ec:
            raise ValueError(f"empty or inverted span: chars [{sc}, {ec})")
        if not (0 <= sc <= len(paragraphs[sp])):
            raise ValueError(f"start_char {sc} outside paragraph {sp}")
        if not (0 <= ec <= len(paragraphs[ep])):
            raise ValueError(f"end_char {ec} outside paragraph {ep}")


@dataclass(frozen=True)
class ClickbaitPost:
    """One corpus record.

    gold_spoilers and positions are parallel; spoiler_type may be None for
    unlabeled (prediction-input) records.  aux_question, when present, is
    the machine-generated question consumed by the auxiliary task; this
    package never generates it.
    """

    id: str
    title_text: str
    paragraphs: tuple
    gold_spoilers: tuple = ()
    positions: tuple = ()
    spoiler_type: Optional[SpoilerType] = None
    aux_question: Optional[str] = None


@dataclass
class CorpusSplit:
    name: str
    posts: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.posts)

    def by_id(self) -> dict:
        return {p.id: p for p in self.posts}


class CorpusValidationError(ValueError):
    """Bulk report of every invalid record in a file."""

    def __init__(self, path, problems):
        self.path = str(path)
        self.problems = list(problems)  # (line_number, record_id or None, message)
        lines = [f"{self.path}: {len(self.problems)} invalid record(s)"]
        for line_no, rec_id, msg in self.problems:
            ident = f" [{rec_id}]" if rec_id else ""
            lines.append(f"  line {line_no}{ident}: {msg}")
        super().__init__("\n".join(lines))


def extract_text_at(post: ClickbaitPost, pos: SpoilerPosition) -> str:
    """Text covered by a position; inter-paragraph boundaries join with one space."""
    pos.validate(post.paragraphs)
    if pos.start_paragraph == pos.end_paragraph:
        return post.paragraphs[pos.start_paragraph][pos.start_char:pos.end_char]
    pieces = [post.paragraphs[pos.start_paragraph][pos.start_char:]]
    for i in range(pos.start_paragraph + 1, pos.end_paragraph):
        pieces.append(post.paragraphs[i])
    pieces.append(post.paragraphs[pos.end_paragraph][:pos.end_char])
    return " ".join(pieces)


def format_classification_input(post: ClickbaitPost) -> str:
    """Classifier input: title, the literal [SEP] token, then the flattened context."""
    return f"{post.title_text} {SEP_TOKEN} " + " ".join(post.paragraphs)


def _parse_position(raw) -> SpoilerPosition:
    # release format: [[start_paragraph, start_char], [end_paragraph, end_char]]
    if (not isinstance(raw, (list, tuple)) or len(raw) != 2
            or any(not isinstance(p, (list, tuple)) or len(p) != 2 for p in raw)):
        raise ValueError(f"position must be [[p, c], [p, c]], got {raw!r}")
    (sp, sc), (ep, ec) = raw
    for v in (sp, sc, ep, ec):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ValueError(f"position indices must be integers, got {raw!r}")
    return SpoilerPosition(sp, sc, ep, ec)


def _parse_record(obj: dict) -> ClickbaitPost:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    rec_id = obj.get("uuid")
    if not isinstance(rec_id, str) or not rec_id:
        raise ValueError("missing or empty 'uuid'")
    title = obj.get("targetTitle")
    if not isinstance(title, str):
        raise ValueError("missing 'targetTitle'")
    paragraphs = obj.get("targetParagraphs")
    if (not isinstance(paragraphs, list) or not paragraphs
            or any(not isinstance(p, str) for p in paragraphs)):
        raise ValueError("'targetParagraphs' must be a non-empty list of strings")

    spoilers = obj.get("spoiler", [])
    if isinstance(spoilers, str):
        spoilers = [spoilers]
    if not isinstance(spoilers, list) or any(not isinstance(s, str) for s in spoilers):
        raise ValueError("'spoiler' must be a list of strings")
    raw_positions = obj.get("spoilerPositions", [])
    if not isinstance(raw_positions, list):
        raise ValueError("'spoilerPositions' must be a list")
    positions = tuple(_parse_position(p) for p in raw_positions)

    tags = obj.get("tags")
    spoiler_type = None
    if tags is not None:
        if not isinstance(tags, list) or not tags or not isinstance(tags[0], str):
            raise ValueError("'tags' must be a non-empty list of strings")
        spoiler_type = SpoilerType.from_tag(tags[0])

    aux = obj.get("auxQuestion")
    if aux is not None and not isinstance(aux, str):
        raise ValueError("'auxQuestion' must be a string")

    post = ClickbaitPost(
        id=rec_id,
        title_text=title,
        paragraphs=tuple(paragraphs),
        gold_spoilers=tuple(spoilers),
        positions=positions,
        spoiler_type=spoiler_type,
        aux_question=aux,
    )
    _check_invariants(post)
    return post


def _check_invariants(post: ClickbaitPost) -> None:
    if len(post.gold_spoilers) != len(post.positions):
        raise ValueError(f"{len(post.gold_spoilers)} spoiler(s) but "
                         f"{len(post.positions)} position(s)")
    if post.spoiler_type is not None and post.gold_spoilers:
        n = len(post.gold_spoilers)
        if post.spoiler_type is SpoilerType.MULTI and n < 2:
            raise ValueError(f"multi record has {n} spoiler(s), needs >= 2")
        if post.spoiler_type in (SpoilerType.PHRASE, SpoilerType.PASSAGE) and n != 1:
            raise ValueError(f"{post.spoiler_type.tag} record has {n} spoilers, needs exactly 1")
    for k, (text, pos) in enumerate(zip(post.gold_spoilers, post.positions)):
        extracted = extract_text_at(post, pos)
        if extracted != text:
            raise ValueError(
                f"position {k} extracts {extracted!r} but spoiler is {text!r}")


def load_corpus(path: Union[str, Path], split: str) -> CorpusSplit:
    """Load and validate one JSONL split.

    Every record is checked against the full invariant set; any failures
    are raised together as a CorpusValidationError with line numbers and
    record ids.  Blank lines are ignored; an empty file is a valid empty
    split.
    """
    if split not in SPLIT_NAMES:
        raise ValueError(f"split must be one of {SPLIT_NAMES}, got {split!r}")
    path = Path(path)
    posts = []
    problems = []
    seen_ids = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec_id = None
            try:
                obj = json.loads(line)
                if isinstance(obj, dict) and isinstance(obj.get("uuid"), str):
                    rec_id = obj["uuid"]
                post = _parse_record(obj)
            except json.JSONDecodeError as exc:
                problems.append((line_no, None, f"malformed JSON: {exc}"))
                continue
            except ValueError as exc:
                problems.append((line_no, rec_id, str(exc)))
                continue
            if post.id in seen_ids:
                problems.append((line_no, post.id,
                                 f"duplicate id (first seen on line {seen_ids[post.id]})"))
                continue
            seen_ids[post.id] = line_no
            posts.append(post)
    if problems:
        raise CorpusValidationError(path, problems)
    return CorpusSplit(name=split, posts=posts)


def post_to_record(post: ClickbaitPost) -> dict:
    """Record dict in the release schema; empty optional fields are omitted."""
    rec = {
        "uuid": post.id,
        "targetTitle": post.title_text,
        "targetParagraphs": list(post.paragraphs),
    }
    if post.gold_spoilers:
        rec["spoiler"] = list(post.gold_spoilers)
        rec["spoilerPositions"] = [
            [[p.start_paragraph, p.start_char], [p.end_paragraph, p.end_char]]
            for p in post.positions
        ]
    if post.spoiler_type is not None:
        rec["tags"] = [post.spoiler_type.tag]
    if post.aux_question is not None:
        rec["auxQuestion"] = post.aux_question
    return rec


def canonical_line(record: dict) -> str:
    """One canonical JSONL line: sorted keys, compact separators, no trailing space."""
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def dump_corpus(split: CorpusSplit, path: Union[str, Path]) -> None:
    """Canonical JSONL re-serialization for golden-file testing."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for post in split.posts:
            fh.write(canonical_line(post_to_record(post)) + "\n")


def type_counts(posts: Iterable[ClickbaitPost]) -> dict:
    """Per-type record counts; unlabeled records count under None."""
    counts = {SpoilerType.PHRASE: 0, SpoilerType.PASSAGE: 0, SpoilerType.MULTI: 0, None: 0}
    for p in posts:
        counts[p.spoiler_type] += 1
    return counts
