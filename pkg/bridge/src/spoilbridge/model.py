"""Small extractive QA model over hashed token-id buckets.

This is the desk-scale stand-in for a fine-tuned encoder: token ids from
the windows file are folded into an embedding table, mixed by a pair of
convolutions, and projected to per-position start/end logits plus a
3-way classification head.  The architecture only has to train and score
deterministically; it makes no pretrained-weight claims.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import torch
from torch import nn

N_BUCKETS = 4096
EMBED_DIM = 64


class SpanScorer(nn.Module):
    def __init__(self, n_buckets: int = N_BUCKETS, dim: int = EMBED_DIM):
        super().__init__()
        self.n_buckets = n_buckets
        self.embed = nn.Embedding(n_buckets, dim)
        self.mix = nn.Sequential(
            nn.Conv1d(dim, dim, kernel_size=3, padding=1),
            nn.ReLU(),
            nn.Conv1d(dim, dim, kernel_size=3, padding=1),
            nn.ReLU(),
        )
        self.span_head = nn.Linear(dim, 2)
        self.class_head = nn.Linear(dim, 3)

    def bucket(self, token_ids) -> torch.Tensor:
        ids = torch.as_tensor(token_ids, dtype=torch.long)
        return ids % self.n_buckets

    def encode(self, token_ids: torch.Tensor) -> torch.Tensor:
        # token_ids: (batch, seq) of bucketed ids
        x = self.embed(token_ids)              # (b, s, d)
        x = self.mix(x.transpose(1, 2)).transpose(1, 2)
        return x

    def forward(self, token_ids: torch.Tensor):
        """(batch, seq) bucketed ids -> start logits, end logits (batch, seq)."""
        hidden = self.encode(token_ids)
        span = self.span_head(hidden)          # (b, s, 2)
        return span[..., 0], span[..., 1]

    def classify(self, token_ids: torch.Tensor) -> torch.Tensor:
        """(batch, seq) -> (batch, 3) class logits via mean pooling."""
        hidden = self.encode(token_ids)
        return self.class_head(hidden.mean(dim=1))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:8]


def save_checkpoint(model: SpanScorer, config: dict, out_dir) -> Path:
    """Checkpoint file named by the hash of its training config."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"mtl-{config_hash(config)}.pt"
    torch.save({"state_dict": model.state_dict(), "config": config}, path)
    return path


def load_checkpoint(path) -> tuple:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    config = payload["config"]
    model = SpanScorer(n_buckets=config.get("n_buckets", N_BUCKETS),
                       dim=config.get("dim", EMBED_DIM))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, config


def fresh_model(seed: int = 0) -> SpanScorer:
    torch.manual_seed(seed)
    model = SpanScorer()
    model.eval()
    return model
