"""spoilbridge command line: train, infer, serve, bertscore, gen-questions."""

from __future__ import annotations

import argparse
import json
import sys

from .model import fresh_model, load_checkpoint
from .train import TrainConfig, train_mtl


def cmd_train(args) -> int:
    config = TrainConfig(lr=args.lr, epochs=args.epochs, batch_size=args.batch_size,
                         alpha=args.alpha, seed=args.seed)
    summary = train_mtl(args.train_windows, args.val_windows, args.out, config)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_train_gen(args) -> int:
    from .seq2seq import train_generator

    summary = train_generator(args.corpus, args.out, epochs=args.epochs,
                              lr=args.lr, seed=args.seed)
    print(json.dumps({"checkpoint": summary["checkpoint"],
                      "first_loss": summary["losses"][0],
                      "last_loss": summary["losses"][-1]}, indent=2))
    return 0


def _load_model(args):
    if args.checkpoint:
        model, _ = load_checkpoint(args.checkpoint)
        return model
    return fresh_model(seed=args.random)


def cmd_infer(args) -> int:
    if args.abstractive:
        from .infer import abstractive_infer
        from .seq2seq import load_generator

        if not args.generator or not args.corpus:
            print("abstractive mode needs --generator and --corpus", file=sys.stderr)
            return 1
        n = abstractive_infer(load_generator(args.generator), args.windows,
                              args.out, args.corpus)
    else:
        from .infer import batch_infer

        n = batch_infer(_load_model(args), args.windows, args.out,
                        corpus_path=args.corpus)
    print(f"{n} records -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .serve import serve

    serve(_load_model(args))
    return 0


def cmd_bertscore(args) -> int:
    from .bertscore import merge_into_report, score_predictions

    summary = score_predictions(args.pred, args.gold, args.out)
    if args.merge_report:
        merge_into_report(args.merge_report, summary["mean"])
    print(json.dumps(summary, indent=2))
    return 0


def cmd_gen_questions(args) -> int:
    from .questions import add_aux_questions

    filled = add_aux_questions(args.corpus, args.out, overwrite=args.overwrite)
    print(f"{filled} auxiliary questions -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spoilbridge",
        description="Neural sidecar for spoilkit: fine-tuning, batch inference, "
                    "a stdio scorer server, and BERTScore-style scoring.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="dual-task fine-tuning on windows JSONL")
    p.add_argument("--train-windows", required=True)
    p.add_argument("--val-windows", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-gen", help="train the long-form generator on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=5e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_gen)

    p = sub.add_parser("infer", help="batch-score windows JSONL to logits JSONL")
    p.add_argument("--windows", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--random", type=int, default=0,
                   help="seed for an untrained model when no checkpoint is given")
    p.add_argument("--corpus", default=None,
                   help="also emit classification logits for these records")
    p.add_argument("--abstractive", action="store_true",
                   help="emit generated text records instead of logits")
    p.add_argument("--generator", default=None, help="generator checkpoint")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("serve", help="speak the stdio scorer protocol")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--random", type=int, default=0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bertscore", help="similarity scores for predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--merge-report", default=None,
                   help="evaluation report JSON to fill bert_score into")
    p.set_defaults(func=cmd_bertscore)

    p = sub.add_parser("gen-questions", help="fill auxQuestion on a corpus copy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_gen_questions)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
