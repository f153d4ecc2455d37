"""Dual-task fine-tuning loop.

Each step draws one batch from the title-text task and one from the
auxiliary-question task, computes start/end cross-entropy for both, and
backpropagates `loss = loss_title + alpha * loss_aux` (alpha 0.5 by
default).  AdamW at lr 1e-5 with linear decay over 5 epochs is the shipped
default schedule; validation loss is averaged per epoch and the state with
the lowest value is the checkpoint that is kept.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from itertools import cycle
from pathlib import Path

import torch
from torch import nn

from .model import SpanScorer, save_checkpoint
from .schemas import read_windows, write_jsonl

NEG_INF = -1e4


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-5
    epochs: int = 5
    batch_size: int = 8
    alpha: float = 0.5
    seed: int = 0
    n_buckets: int = 4096
    dim: int = 64


def _batches(windows, batch_size):
    for at in range(0, len(windows), batch_size):
        yield windows[at:at + batch_size]


def _collate(model: SpanScorer, batch):
    """Pad a batch of window records to a shared length."""
    max_len = max(w["token_count"] for w in batch)
    ids = torch.zeros(len(batch), max_len, dtype=torch.long)
    mask = torch.zeros(len(batch), max_len, dtype=torch.bool)
    starts = torch.zeros(len(batch), dtype=torch.long)
    ends = torch.zeros(len(batch), dtype=torch.long)
    for row, w in enumerate(batch):
        n = w["token_count"]
        ids[row, :n] = model.bucket(w["token_ids"])
        mask[row, :n] = True
        starts[row], ends[row] = w["answer_span"]
    return ids, mask, starts, ends


def _span_loss(model: SpanScorer, batch) -> torch.Tensor:
    ids, mask, starts, ends = _collate(model, batch)
    start_logits, end_logits = model(ids)
    start_logits = start_logits.masked_fill(~mask, NEG_INF)
    end_logits = end_logits.masked_fill(~mask, NEG_INF)
    ce = nn.functional.cross_entropy
    return (ce(start_logits, starts) + ce(end_logits, ends)) / 2.0


def _epoch_losses(model, orig, aux, alpha, batch_size):
    """Average combined loss over the split without gradient updates."""
    losses = []
    with torch.no_grad():
        aux_iter = cycle(list(_batches(aux, batch_size))) if aux else None
        for batch in _batches(orig, batch_size):
            loss = _span_loss(model, batch)
            if aux_iter is not None:
                loss = loss + alpha * _span_loss(model, next(aux_iter))
            losses.append(float(loss))
    return sum(losses) / len(losses)


def train_mtl(train_windows_path, val_windows_path, out_dir,
              config: TrainConfig = TrainConfig()) -> dict:
    """Train on windows JSONL files; returns a summary dict.

    Writes `loss_log.jsonl` (a header echoing the schedule, then one record
    per epoch) and the min-validation-loss checkpoint, named by the hash of
    the training config.
    """
    torch.manual_seed(config.seed)
    torch.set_num_threads(1)

    train_windows = read_windows(train_windows_path)
    val_windows = read_windows(val_windows_path)
    if not train_windows:
        raise ValueError(f"no training windows in {train_windows_path}")
    t_orig = [w for w in train_windows if w["task"] == "orig"]
    t_aux = [w for w in train_windows if w["task"] == "aux"]
    v_orig = [w for w in val_windows if w["task"] == "orig"]
    v_aux = [w for w in val_windows if w["task"] == "aux"]
    if not t_orig or not v_orig:
        raise ValueError("both splits need title-task windows")

    model = SpanScorer(n_buckets=config.n_buckets, dim=config.dim)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr)
    steps_per_epoch = math.ceil(len(t_orig) / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: 1.0 - step / total_steps)

    log = [{"schedule": {"lr": config.lr, "epochs": config.epochs,
                         "batch_size": config.batch_size,
                         "total_steps": total_steps, "alpha": config.alpha,
                         "seed": config.seed}}]
    train_curve, val_curve = [], []
    best_val = math.inf
    best_state = None
    for epoch in range(1, config.epochs + 1):
        model.train()
        aux_iter = cycle(list(_batches(t_aux, config.batch_size))) if t_aux else None
        for batch in _batches(t_orig, config.batch_size):
            optimizer.zero_grad()
            loss = _span_loss(model, batch)
            if aux_iter is not None:
                loss = loss + config.alpha * _span_loss(model, next(aux_iter))
            loss.backward()
            optimizer.step()
            scheduler.step()

        model.eval()
        train_loss = _epoch_losses(model, t_orig, t_aux, config.alpha,
                                   config.batch_size)
        val_loss = _epoch_losses(model, v_orig, v_aux, config.alpha,
                                 config.batch_size)
        train_curve.append(train_loss)
        val_curve.append(val_loss)
        log.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}

    model.load_state_dict(best_state)
    model.eval()
    checkpoint = save_checkpoint(model, asdict(config), out_dir)
    write_jsonl(Path(out_dir) / "loss_log.jsonl", log)
    return {
        "checkpoint": str(checkpoint),
        "train_losses": train_curve,
        "val_losses": val_curve,
        "best_epoch": val_curve.index(min(val_curve)) + 1,
    }
