"""Command-line front end.

Four subcommands wire the pipeline with file-based, auditable
intermediates: `ingest` validates and canonicalizes a corpus split,
`classify` predicts spoiler types, `generate` extracts spoiler spans, and
`eval` scores predictions against gold.

Configuration precedence: built-in defaults < --config file (JSON or
key=value lines) < SPOILKIT_* environment variables < explicit flags.
Every command writes a manifest (effective config, input hashes, package
version) next to its outputs; runs with stub or file scorers reproduce
outputs byte-for-byte.

Exit codes: 0 success, 1 validation failure, 2 scorer/transport failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .corpus import (CorpusValidationError, SpoilerType, canonical_line,
                     format_classification_input, load_corpus, post_to_record,
                     type_counts)
from .metrics import MissingPredictionsError, evaluate_split
from .mtl_math import one_sample_ttest
from .qa_prep import (CLASSIFICATION_MAX_TOKENS, DEFAULT_STRIDE,
                      MAX_WINDOW_TOKENS, VocabTokenizer, head_truncate,
                      prepare_task_inputs)
from .retrieval import DEFAULT_TOP_K, reduce_context
from .scorer import ScorerError, make_scorer, classify, score_window
from .span_select import (MAX_ANSWER_LEN_MULTI, MAX_ANSWER_LEN_PASSAGE,
                          MAX_ANSWER_LEN_PHRASE, TaskView, best_span_in_window,
                          combine_tasks, select_across_windows,
                          select_multi_spans)

ENV_PREFIX = "SPOILKIT_"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SCORER = 2


@dataclass
class RunConfig:
    """Effective settings of one command, recorded verbatim in the manifest."""

    input: str
    split: str = "validation"
    out_dir: str = "."
    scorer: str = "stub:0"
    k: int = DEFAULT_TOP_K
    alpha: float = 0.5
    max_len: int = MAX_WINDOW_TOKENS
    stride: int = DEFAULT_STRIDE
    max_answer_len_phrase: int = MAX_ANSWER_LEN_PHRASE
    max_answer_len_passage: int = MAX_ANSWER_LEN_PASSAGE
    max_answer_len_multi: int = MAX_ANSWER_LEN_MULTI
    reduce: bool = False
    jobs: int = 1
    vocab: Optional[str] = None

    def max_answer_len_for(self, spoiler_type: SpoilerType) -> int:
        return {SpoilerType.PHRASE: self.max_answer_len_phrase,
                SpoilerType.PASSAGE: self.max_answer_len_passage,
                SpoilerType.MULTI: self.max_answer_len_multi}[spoiler_type]


def _load_config_file(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(text)
    values = {}
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(name: str, cli_value, file_cfg: dict, cast, default):
    """defaults < config file < environment < explicit flag."""
    if cli_value is not None:
        return cli_value
    env = os.environ.get(ENV_PREFIX + name.upper())
    if env is not None:
        return cast(env)
    if name in file_cfg:
        value = file_cfg[name]
        return cast(value) if isinstance(value, str) else value
    return default


def _bool_cast(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_jsonl(path: Path, lines) -> None:
    _atomic_write(path, "".join(line + "\n" for line in lines))


def _write_manifest(out_dir: Path, command: str, config: dict, inputs) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "version": __version__,
    }
    _atomic_write(out_dir / "manifest.json",
                  json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _load_split(path: str, split: str):
    # CorpusValidationError and OSError surface through main() as exit code 1
    return load_corpus(path, split)


# ---------------------------------------------------------------- ingest

def cmd_ingest(args) -> int:
    cfg_file = _load_config_file(args.config) if args.config else {}
    split = _resolve("split", args.split, cfg_file, str, "validation")
    out_dir = Path(_resolve("out_dir", args.out, cfg_file, str, "."))
    corpus = _load_split(args.input, split)

    _write_jsonl(out_dir / f"corpus.{split}.jsonl",
                 (canonical_line(post_to_record(p)) for p in corpus.posts))
    _write_manifest(out_dir, "ingest",
                    {"input": args.input, "split": split, "out_dir": str(out_dir)},
                    [args.input])

    counts = type_counts(corpus.posts)
    parts = [f"phrase {counts[SpoilerType.PHRASE]}",
             f"passage {counts[SpoilerType.PASSAGE]}",
             f"multi {counts[SpoilerType.MULTI]}"]
    if counts[None]:
        parts.append(f"untyped {counts[None]}")
    print(f"{len(corpus)} posts; " + ", ".join(parts))
    return EXIT_OK


# -------------------------------------------------------------- classify

def cmd_classify(args) -> int:
    cfg_file = _load_config_file(args.config) if args.config else {}
    cfg = RunConfig(
        input=args.input,
        split=_resolve("split", args.split, cfg_file, str, "validation"),
        out_dir=str(Path(_resolve("out_dir", args.out, cfg_file, str, "."))),
        scorer=_resolve("scorer", args.scorer, cfg_file, str, "stub:0"),
        jobs=_resolve("jobs", args.jobs, cfg_file, int, 1),
    )
    corpus = _load_split(cfg.input, cfg.split)
    scorer = make_scorer(cfg.scorer)

    def classify_post(post):
        text = head_truncate(format_classification_input(post),
                             CLASSIFICATION_MAX_TOKENS)
        probs, predicted = classify(scorer, text, post_id=post.id)
        return {"post_id": post.id, "label": int(predicted),
                "probabilities": [float(p) for p in probs]}

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        records = list(pool.map(classify_post, corpus.posts))
    records.sort(key=lambda r: r["post_id"])

    out_dir = Path(cfg.out_dir)
    _write_jsonl(out_dir / "classifications.jsonl",
                 (json.dumps(r, sort_keys=True, separators=(",", ":")) for r in records))
    _write_manifest(out_dir, "classify", asdict(cfg), [cfg.input])

    if all(p.spoiler_type is not None for p in corpus.posts):
        report = evaluate_split(records, corpus, "classification")
        _atomic_write(out_dir / "report.json", report.to_json() + "\n")
        print(report.to_table())
    else:
        print(f"{len(records)} predictions written; gold labels missing, metrics omitted")
    return EXIT_OK


# -------------------------------------------------------------- generate

def _predicted_types(path: str) -> dict:
    types = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                types[rec["post_id"]] = SpoilerType(rec["label"])
    return types


def _generate_one(post, cfg: RunConfig, scorer, tokenizer, spoiler_type):
    reduced = reduce_context(post, cfg.k) if cfg.reduce else None
    prepared = prepare_task_inputs(post, reduced, cfg.max_len, cfg.stride, tokenizer)
    max_answer = cfg.max_answer_len_for(spoiler_type)

    orig_sheets = [score_window(scorer, w) for w in prepared.orig_windows]
    orig_preds = [best_span_in_window(s, w, max_answer, prepared.orig_context)
                  for s, w in zip(orig_sheets, prepared.orig_windows)]
    final = select_across_windows(orig_preds)

    if prepared.aux_windows:
        aux_sheets = [score_window(scorer, w) for w in prepared.aux_windows]
        aux_preds = [best_span_in_window(s, w, max_answer, prepared.aux_context)
                     for s, w in zip(aux_sheets, prepared.aux_windows)]
        aux_best = select_across_windows(aux_preds)
        final = combine_tasks(
            final, aux_best,
            TaskView(prepared.orig_windows, orig_sheets, prepared.orig_context),
            TaskView(prepared.aux_windows, aux_sheets, prepared.aux_context),
            alpha=cfg.alpha)

    record = final.to_record()
    if spoiler_type is SpoilerType.MULTI:
        n = len(post.gold_spoilers) or 3
        spans = select_multi_spans(orig_sheets, prepared.orig_windows,
                                   prepared.orig_context, n, max_answer)
        if spans:
            record = spans[0].to_record()
            record["text"] = " ".join(sp.text for sp in spans)
            record["spans"] = [sp.to_record() for sp in spans]

    windows = list(prepared.orig_windows) + list(prepared.aux_windows)
    return record, windows, reduced


def cmd_generate(args) -> int:
    cfg_file = _load_config_file(args.config) if args.config else {}
    reduce_flag = args.reduce
    if reduce_flag is None:
        reduce_flag = _resolve("reduce", None, cfg_file, _bool_cast, False)
    cfg = RunConfig(
        input=args.input,
        split=_resolve("split", args.split, cfg_file, str, "validation"),
        out_dir=str(Path(_resolve("out_dir", args.out, cfg_file, str, "."))),
        scorer=_resolve("scorer", args.scorer, cfg_file, str, "stub:0"),
        k=_resolve("k", args.k, cfg_file, int, DEFAULT_TOP_K),
        alpha=_resolve("alpha", args.alpha, cfg_file, float, 0.5),
        max_len=_resolve("max_len", args.max_len, cfg_file, int, MAX_WINDOW_TOKENS),
        stride=_resolve("stride", args.stride, cfg_file, int, DEFAULT_STRIDE),
        max_answer_len_phrase=_resolve("max_answer_len_phrase", None, cfg_file,
                                       int, MAX_ANSWER_LEN_PHRASE),
        max_answer_len_passage=_resolve("max_answer_len_passage", None, cfg_file,
                                        int, MAX_ANSWER_LEN_PASSAGE),
        max_answer_len_multi=_resolve("max_answer_len_multi", None, cfg_file,
                                      int, MAX_ANSWER_LEN_MULTI),
        reduce=reduce_flag,
        jobs=_resolve("jobs", args.jobs, cfg_file, int, 1),
        vocab=_resolve("vocab", args.vocab, cfg_file, str, None),
    )
    corpus = _load_split(cfg.input, cfg.split)
    scorer = make_scorer(cfg.scorer)
    tokenizer = VocabTokenizer(cfg.vocab) if cfg.vocab else None
    types = _predicted_types(args.types) if args.types else {}

    def run_one(post):
        spoiler_type = types.get(post.id, post.spoiler_type) or SpoilerType.PHRASE
        return post.id, _generate_one(post, cfg, scorer, tokenizer, spoiler_type)

    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        results = dict(pool.map(run_one, corpus.posts))

    out_dir = Path(cfg.out_dir)
    ordered_ids = sorted(results)
    _write_jsonl(out_dir / "predictions.jsonl",
                 (json.dumps(results[pid][0], sort_keys=True, ensure_ascii=False,
                             separators=(",", ":")) for pid in ordered_ids))
    window_lines = []
    for pid in ordered_ids:
        for w in results[pid][1]:
            window_lines.append(json.dumps(w.to_record(), sort_keys=True,
                                           separators=(",", ":")))
    _write_jsonl(out_dir / "windows.jsonl", window_lines)
    if cfg.reduce:
        _write_jsonl(out_dir / "reduced.jsonl",
                     (results[pid][2].to_json_line() for pid in ordered_ids
                      if results[pid][2] is not None))
    inputs = [cfg.input] + ([args.types] if args.types else [])
    _write_manifest(out_dir, "generate", asdict(cfg), inputs)
    print(f"{len(ordered_ids)} spoiler predictions -> {out_dir / 'predictions.jsonl'}")
    return EXIT_OK


# ------------------------------------------------------------------ eval

def cmd_eval(args) -> int:
    cfg_file = _load_config_file(args.config) if args.config else {}
    split = _resolve("split", args.split, cfg_file, str, "validation")
    gold = _load_split(args.gold, split)
    try:
        report = evaluate_split(args.pred, gold, args.task)
    except MissingPredictionsError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION

    output = report.to_dict()
    print(report.to_table())

    if args.ttest_scores:
        with open(args.ttest_scores, "r", encoding="utf-8") as fh:
            samples = [float(line) for line in fh if line.strip()]
        result = one_sample_ttest(samples, args.ttest_mu0,
                                  alternative=args.ttest_alternative)
        output["ttest"] = {"t_statistic": result.t_statistic,
                           "p_value": result.p_value, "df": result.df,
                           "mu0": args.ttest_mu0,
                           "alternative": result.alternative}
        print(f"t-test vs mu0={args.ttest_mu0}: t={result.t_statistic:.4f} "
              f"p={result.p_value:.6f} df={result.df} ({result.alternative})")

    if args.out:
        out_dir = Path(args.out)
        _atomic_write(out_dir / "report.json",
                      json.dumps(output, sort_keys=True, indent=2) + "\n")
        inputs = [args.pred, args.gold] + ([args.ttest_scores] if args.ttest_scores else [])
        _write_manifest(out_dir, "eval",
                        {"pred": args.pred, "gold": args.gold, "task": args.task,
                         "split": split}, inputs)
    return EXIT_OK


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spoilkit",
        description="Clickbait spoiling pipeline: classify spoiler types, "
                    "reduce context with BM25, extract spoiler spans, evaluate.")
    parser.add_argument("--version", action="version", version=f"spoilkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON or key=value config file")
        p.add_argument("--split", choices=("train", "validation", "test"),
                       default=None, help="split name (default: validation)")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("ingest", help="validate a corpus file and write canonical JSONL")
    p.add_argument("--input", required=True, help="corpus JSONL file")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("classify", help="predict spoiler types")
    p.add_argument("--input", required=True)
    common(p)
    p.add_argument("--scorer", default=None,
                   help="stub:SEED[:teacher] | file:PATH | bridge:CMD")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("generate", help="extract spoiler spans")
    p.add_argument("--input", required=True)
    common(p)
    p.add_argument("--scorer", default=None)
    p.add_argument("--reduce", dest="reduce", action="store_true", default=None,
                   help="reduce context to the top-k paragraphs by BM25")
    p.add_argument("--no-reduce", dest="reduce", action="store_false")
    p.add_argument("--k", type=int, default=None, help="paragraphs to keep (default 5)")
    p.add_argument("--alpha", type=float, default=None,
                   help="auxiliary-task weight for span combination (default 0.5)")
    p.add_argument("--max-len", type=int, default=None, dest="max_len")
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--types", default=None,
                   help="classifications.jsonl giving the spoiler type per post")
    p.add_argument("--vocab", default=None, help="vocabulary file for the plug-in tokenizer")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--pred", required=True, help="predictions JSONL")
    p.add_argument("--gold", required=True, help="gold corpus JSONL")
    p.add_argument("--task", required=True, choices=("classification", "generation"))
    common(p)
    p.add_argument("--ttest-scores", default=None,
                   help="file with one run score per line for a one-sample t-test")
    p.add_argument("--ttest-mu0", type=float, default=None)
    p.add_argument("--ttest-alternative", default="two-sided",
                   choices=("two-sided", "greater", "less"))
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "ttest_scores", None) and args.ttest_mu0 is None:
        print("--ttest-scores requires --ttest-mu0", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except ScorerError as exc:
        print(f"scorer failure: {exc}", file=sys.stderr)
        return EXIT_SCORER
    except CorpusValidationError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
