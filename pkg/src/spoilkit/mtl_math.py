"""Training-side math as pure functions: stable softmax, cross-entropy,
weighted two-task loss, linear LR decay, min-validation-loss checkpoint
selection, and a one-sample t-test.

None of these perform gradient updates; they are consumed by the pipeline
and by the optional training sidecar.  Natural log throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

PROB_FLOOR = 1e-12

# shipped default for the auxiliary-task weight
DEFAULT_ALPHA = 0.5


class DegenerateVarianceError(ValueError):
    """All samples identical: the t statistic is undefined."""


@dataclass(frozen=True)
class LossPair:
    """Per-task losses and the auxiliary weight for the combined loss."""

    l1: float  # auxiliary-question task
    l2: float  # title-text task
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        for name in ("l1", "l2", "alpha"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")


@dataclass(frozen=True)
class TrainSchedule:
    """Optimizer schedule constants (batch 8, lr 1e-5, 5 epochs by default)."""

    base_lr: float = 1e-5
    epochs: int = 5
    batch_size: int = 8
    total_steps: int = 0

    def __post_init__(self):
        if self.base_lr <= 0 or self.epochs <= 0 or self.batch_size <= 0 or self.total_steps <= 0:
            raise ValueError("schedule parameters must be positive")

    @classmethod
    def for_dataset(cls, n_train: int, base_lr: float = 1e-5, epochs: int = 5,
                    batch_size: int = 8) -> "TrainSchedule":
        """total_steps = ceil(n_train / batch_size) * epochs."""
        if n_train <= 0:
            raise ValueError("n_train must be positive")
        steps = math.ceil(n_train / batch_size) * epochs
        return cls(base_lr=base_lr, epochs=epochs, batch_size=batch_size, total_steps=steps)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    df: int
    alternative: str = "two-sided"


def softmax(logits: Sequence[float]) -> np.ndarray:
    """Stable softmax (max-subtraction); output sums to 1 within 1e-12."""
    x = np.asarray(logits, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("softmax expects a non-empty 1-d vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("softmax expects finite logits")
    z = np.exp(x - x.max())
    return z / z.sum()


def cross_entropy(y: Sequence[float], y_hat: Sequence[float]) -> float:
    """-sum(y_i * ln(y_hat_i)) with y one-hot and y_hat floored at 1e-12."""
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(y_hat, dtype=np.float64)
    if y.shape != p.shape:
        raise ValueError(f"length mismatch: y has {y.shape}, y_hat has {p.shape}")
    return float(-(y * np.log(np.maximum(p, PROB_FLOOR))).sum())


def combined_loss(pair: LossPair) -> float:
    """Total loss: task-2 loss plus alpha times the auxiliary task-1 loss."""
    return pair.l2 + pair.alpha * pair.l1


def linear_lr(schedule: TrainSchedule, step: int) -> float:
    """Linear decay from base_lr at step 0 to 0 at total_steps; no warmup."""
    if step < 0 or step > schedule.total_steps:
        raise ValueError(f"step {step} outside [0, {schedule.total_steps}]")
    return schedule.base_lr * (1.0 - step / schedule.total_steps)


def select_checkpoint(val_losses: Sequence[float]) -> int:
    """Index of the minimum validation loss; first occurrence wins ties."""
    if len(val_losses) == 0:
        raise ValueError("no validation losses given")
    best = 0
    for i, v in enumerate(val_losses):
        if v < val_losses[best]:
            best = i
    return best


def one_sample_ttest(samples: Sequence[float], mu0: float,
                     alternative: str = "two-sided") -> TTestResult:
    """One-sample t-test of H0: mean == mu0.

    t = (mean - mu0) / (s / sqrt(n)) with s the (n-1)-denominator standard
    deviation.  `alternative` is "two-sided" (default), "greater" or "less";
    the one-sided options mirror a directional claim against a baseline.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    n = len(samples)
    if n < 2:
        raise ValueError("need at least 2 samples")
    x = np.asarray(samples, dtype=np.float64)
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    if var <= 0.0:
        raise DegenerateVarianceError("sample variance is zero; t is undefined")
    df = n - 1
    t = (mean - mu0) / math.sqrt(var / n)
    sf = _student_t_sf(t, df)  # P(T >= t)
    if alternative == "two-sided":
        p = 2.0 * _student_t_sf(abs(t), df)
    elif alternative == "greater":
        p = sf
    else:
        p = 1.0 - sf
    return TTestResult(t_statistic=t, p_value=min(max(p, 0.0), 1.0), df=df,
                       alternative=alternative)


def _student_t_sf(t: float, df: int) -> float:
    """Upper-tail probability P(T >= t) for Student's t with df degrees.

    For t >= 0, P(T >= t) = 0.5 * I_x(df/2, 1/2) with x = df / (df + t^2);
    negative t uses symmetry.  I_x is the regularized incomplete beta,
    evaluated by continued fraction to ~1e-14.
    """
    if t < 0:
        return 1.0 - _student_t_sf(-t, df)
    x = df / (df + t * t)
    return 0.5 * _betainc_reg(df / 2.0, 0.5, x)


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) via modified Lentz continued
    fraction, switching tails at x = (a+1)/(a+b+2) for convergence."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-15) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")
