"""Tiny encoder-decoder for long-form spoiler generation.

A word-level GRU sequence-to-sequence model trained to emit the gold
spoiler from the title plus paragraphs.  It is the desk-scale stand-in
for a long-sequence generation model: big enough to overfit a small
corpus and demonstrate the abstractive output path, nothing more.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import nn

from .questions import simple_tokenize
from .schemas import read_corpus_records

PAD, BOS, EOS, UNK = 0, 1, 2, 3
MAX_SOURCE_TOKENS = 512
MAX_TARGET_TOKENS = 80


class Seq2Seq(nn.Module):
    def __init__(self, vocab: dict, dim: int = 64):
        super().__init__()
        self.vocab = vocab
        self.inverse = {i: w for w, i in vocab.items()}
        self.embed = nn.Embedding(len(vocab), dim, padding_idx=PAD)
        self.encoder = nn.GRU(dim, dim, batch_first=True)
        self.decoder = nn.GRU(dim, dim, batch_first=True)
        self.out = nn.Linear(dim, len(vocab))

    def encode_ids(self, tokens):
        return [self.vocab.get(t, UNK) for t in tokens]

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor):
        _, state = self.encoder(self.embed(src))
        hidden, _ = self.decoder(self.embed(tgt_in), state)
        return self.out(hidden)

    @torch.no_grad()
    def greedy_decode(self, src: torch.Tensor, max_len: int = MAX_TARGET_TOKENS):
        _, state = self.encoder(self.embed(src))
        token = torch.tensor([[BOS]])
        out = []
        for _ in range(max_len):
            hidden, state = self.decoder(self.embed(token), state)
            token = self.out(hidden)[:, -1].argmax(dim=-1, keepdim=True)
            if int(token) == EOS:
                break
            out.append(int(token))
        return out


def _source_tokens(title: str, paragraphs) -> list:
    tokens = simple_tokenize(title) + simple_tokenize(" ".join(paragraphs))
    return tokens[:MAX_SOURCE_TOKENS]


def build_vocab(records) -> dict:
    vocab = {"<pad>": PAD, "<bos>": BOS, "<eos>": EOS, "<unk>": UNK}
    for rec in records:
        words = _source_tokens(rec["targetTitle"], rec["targetParagraphs"])
        words += simple_tokenize(" ".join(rec.get("spoiler", [])))
        for w in words:
            if w not in vocab:
                vocab[w] = len(vocab)
    return vocab


def train_generator(corpus_path, out_dir, epochs: int = 40, lr: float = 5e-3,
                    dim: int = 64, seed: int = 0) -> dict:
    """Teacher-forced training to reproduce gold spoilers; returns summary."""
    torch.manual_seed(seed)
    torch.set_num_threads(1)
    records = [r for r in read_corpus_records(corpus_path) if r.get("spoiler")]
    if not records:
        raise ValueError(f"no spoiled records in {corpus_path}")
    vocab = build_vocab(records)
    model = Seq2Seq(vocab, dim=dim)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)

    examples = []
    for rec in records:
        src = torch.tensor([model.encode_ids(
            _source_tokens(rec["targetTitle"], rec["targetParagraphs"]))])
        tgt = model.encode_ids(simple_tokenize(" ".join(rec["spoiler"])))
        tgt = tgt[:MAX_TARGET_TOKENS]
        examples.append((src, torch.tensor([[BOS] + tgt]), torch.tensor([tgt + [EOS]])))

    losses = []
    for _ in range(epochs):
        total = 0.0
        model.train()
        for src, tgt_in, tgt_out in examples:
            optimizer.zero_grad()
            logits = model(src, tgt_in)
            loss = nn.functional.cross_entropy(
                logits.view(-1, logits.shape[-1]), tgt_out.view(-1))
            loss.backward()
            optimizer.step()
            total += float(loss.detach())
        losses.append(total / len(examples))

    model.eval()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "generator.pt"
    torch.save({"state_dict": model.state_dict(), "vocab": vocab, "dim": dim}, path)
    return {"checkpoint": str(path), "losses": losses}


def load_generator(path) -> Seq2Seq:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = Seq2Seq(payload["vocab"], dim=payload["dim"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


def generate_spoiler(model: Seq2Seq, title: str, paragraphs) -> str:
    src = torch.tensor([model.encode_ids(_source_tokens(title, paragraphs))])
    ids = model.greedy_decode(src)
    return " ".join(model.inverse.get(i, "<unk>") for i in ids)
