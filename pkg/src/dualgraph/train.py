"""Loss, Adam, learning-rate schedules, and the single-run training loop.

Graphs in one dataset differ in size by orders of magnitude, so instead of
batching disjoint unions the loop accumulates per-sample gradients over
``batch_size`` samples, averages, and takes one optimizer step. The math is
identical to mini-batching with a mean-reduced loss.

Randomness is split into three independent streams derived from the run
seed: parameter init uses ``default_rng(seed)``, the per-epoch shuffle uses
``default_rng((seed, 1))``, dropout uses ``default_rng((seed, 2))``. Two
runs with equal inputs and seed are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .autodiff import Tensor2
from .config import ModelConfig, SchedulerKind, TrainConfig, config_fingerprint
from .graphs import SamplePair, ValidationError
from .metrics import f1_score
from .model import Model, PreparedSample, prepare_sample

__all__ = [
    "cross_entropy_loss",
    "cross_entropy_grad",
    "AdamState",
    "adam_step",
    "one_cycle_lr",
    "PlateauState",
    "EpochRecord",
    "TrainResult",
    "train_run",
    "write_run_log",
]

CLAMP = 1e-12


def cross_entropy_loss(probs: np.ndarray, label: int) -> float:
    """Negative log-likelihood with probabilities clamped to >= 1e-12."""
    if label not in (0, 1):
        raise ValidationError(f"label must be 0 or 1, got {label}")
    return -math.log(max(float(probs[label]), CLAMP))


def cross_entropy_grad(probs: np.ndarray, label: int) -> np.ndarray:
    """d(loss)/d(probs); zero where the clamp is active."""
    if label not in (0, 1):
        raise ValidationError(f"label must be 0 or 1, got {label}")
    g = np.zeros(2)
    p = float(probs[label])
    if p >= CLAMP:
        g[label] = -1.0 / p
    return g


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(
    params: Mapping[str, Tensor2],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """One bias-corrected Adam update, in place."""
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for name, p in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p.values)
            state.v[name] = np.zeros_like(p.values)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.values -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def one_cycle_lr(step: int, total_steps: int, max_lr: float) -> float:
    """Linear warm-up over the first 30% of steps, then cosine anneal.

    Starts at max_lr/25, peaks at max_lr on step round(0.3*total_steps),
    and lands exactly on max_lr/1e4 at the final step.
    """
    if not 0 <= step < total_steps:
        raise ValidationError(f"step {step} out of range [0, {total_steps})")
    warm = round(0.3 * total_steps)
    if step <= warm and warm > 0:
        start = max_lr / 25.0
        return start + (max_lr - start) * (step / warm)
    span = total_steps - 1 - warm
    if span <= 0:
        return max_lr
    floor = max_lr / 1e4
    progress = (step - warm) / span
    return floor + (max_lr - floor) * (1.0 + math.cos(math.pi * progress)) / 2.0


class PlateauState:
    """Halve the rate after 10 epochs without a validation-F1 improvement.

    An improvement must exceed the best score so far by more than 1e-4.
    The counter resets after each halving; the rate never drops below 1e-6.
    """

    PATIENCE = 10
    THRESHOLD = 1e-4
    FACTOR = 0.5
    FLOOR = 1e-6

    def __init__(self, initial_lr: float):
        self.lr = initial_lr
        self.best = -math.inf
        self.bad = 0

    def observe(self, val_f1: float) -> float:
        """Record one epoch's validation F1; returns the rate to use next."""
        if val_f1 > self.best + self.THRESHOLD:
            self.best = val_f1
            self.bad = 0
        else:
            self.bad += 1
            if self.bad >= self.PATIENCE:
                self.lr = max(self.lr * self.FACTOR, self.FLOOR)
                self.bad = 0
        return self.lr


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    val_f1: float
    lr: float


@dataclass
class TrainResult:
    best_params: dict[str, np.ndarray]
    records: tuple[EpochRecord, ...]
    best_epoch: int
    best_f1: float


def _predict(model: Model, prepared: Sequence[PreparedSample]) -> list[int]:
    return [int(np.argmax(model.forward(p))) for p in prepared]


def train_run(
    train_samples: Sequence[SamplePair],
    val_samples: Sequence[SamplePair],
    config: ModelConfig,
    train_config: TrainConfig,
) -> TrainResult:
    """Train one model; returns the best-epoch snapshot and the full trace.

    pre: the two splits are disjoint. Best epoch = maximal validation F1,
    ties resolved toward the earliest epoch. The recorded lr is the one in
    effect for the epoch's final optimizer step.
    """
    if not train_samples or not val_samples:
        raise ValidationError("empty split")
    model = Model(config, seed=train_config.seed)
    prep_train = [prepare_sample(s, config) for s in train_samples]
    prep_val = [prepare_sample(s, config) for s in val_samples]
    val_labels = [s.label for s in val_samples]
    shuffle_rng = np.random.default_rng((train_config.seed, 1))
    dropout_rng = np.random.default_rng((train_config.seed, 2))
    adam = AdamState()
    n = len(prep_train)
    bs = train_config.batch_size
    steps_per_epoch = math.ceil(n / bs)
    total_steps = train_config.epochs * steps_per_epoch
    plateau = PlateauState(train_config.base_lr)
    lr = train_config.base_lr
    step = 0

    records: list[EpochRecord] = []
    best_f1 = -1.0
    best_epoch = -1
    best_params: dict[str, np.ndarray] = {}
    for epoch in range(1, train_config.epochs + 1):
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, bs):
            batch = order[start : start + bs]
            model.zero_grad()
            grads: dict[str, np.ndarray] = {}
            for idx in batch:
                sample = prep_train[idx]
                probs = model.forward(sample, train=True, rng=dropout_rng)
                loss_sum += cross_entropy_loss(probs, sample.label)
                grads = model.backward(cross_entropy_grad(probs, sample.label))
            grads = {name: g / len(batch) for name, g in grads.items()}
            if config.scheduler is SchedulerKind.ONECYCLE:
                lr = one_cycle_lr(step, total_steps, train_config.base_lr)
            adam_step(model.params, grads, adam, lr)
            step += 1
        val_f1 = f1_score(_predict(model, prep_val), val_labels)
        records.append(EpochRecord(epoch, loss_sum / n, val_f1, lr))
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_params = model.value_snapshot()
        if config.scheduler is SchedulerKind.PLATEAU:
            lr = plateau.observe(val_f1)
    return TrainResult(best_params, tuple(records), best_epoch, best_f1)


def write_run_log(path, records: Sequence[EpochRecord], config: ModelConfig, train_config: TrainConfig) -> None:
    """CSV trace, one line per epoch, prefixed by fingerprint and seed."""
    lines = [
        f"# config={config_fingerprint(config, train_config)} seed={train_config.seed}",
        "epoch,loss,val_f1,lr",
    ]
    lines.extend(f"{r.epoch},{r.loss!r},{r.val_f1!r},{r.lr!r}" for r in records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
