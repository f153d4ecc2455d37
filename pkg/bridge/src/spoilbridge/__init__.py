"""spoilbridge: optional neural sidecar for the spoilkit pipeline.

Talks to the pipeline only through its file schemas (windows JSONL in,
logit sheets JSONL out) and the stdio scorer protocol.  Provides
dual-task fine-tuning with min-validation-loss checkpointing, batch and
live inference, a small abstractive generator, rule-based auxiliary
question generation, and a BERTScore-style similarity metric.
"""

__version__ = "0.1.0"

from .model import SpanScorer, fresh_model, load_checkpoint
from .train import TrainConfig, train_mtl

__all__ = ["__version__", "SpanScorer", "fresh_model", "load_checkpoint",
           "TrainConfig", "train_mtl"]
