"""Seeded generator of labeled graph pairs with a class signal that can be
planted in either modality or split across both.

Stands in for a real corpus that cannot be redistributed. Topology models:
call graphs are preferential-attachment digraphs (heavy-tailed degrees, two
edges per new function), process graphs are random recursive trees (each
process spawned by a uniformly chosen predecessor). Class cues:

  fcg cue   extra edges aimed at the highest-degree node, sharpening the
            degree skew that the degree profile picks up
  pcg cue   a deep spawn chain ending in a fan-out burst, replacing the
            shallow random tree shape

In ``complementary`` mode malicious samples carry both cues while each
benign sample carries exactly one (alternating), so either modality alone
leaves half the cue-bearing benign samples indistinguishable from malware
and the pair is needed for clean separation.

File entropy is Beta-distributed scaled to [0, 8]; with the class shift
enabled, malicious samples draw from a higher-mean distribution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .graphs import Dataset, Graph, SamplePair, ValidationError, canonicalize

__all__ = ["SignalMode", "GenSpec", "generate"]


class SignalMode(enum.Enum):
    FCG_ONLY = "fcg_only"
    PCG_ONLY = "pcg_only"
    COMPLEMENTARY = "complementary"

    @classmethod
    def parse(cls, text: str) -> "SignalMode":
        for member in cls:
            if member.value == text:
                return member
        raise ValidationError(f"unknown signal mode {text!r}")


@dataclass(frozen=True)
class GenSpec:
    n_samples: int
    balance: float = 0.5
    seed: int = 0
    fcg_nodes: tuple[int, int] = (50, 400)
    pcg_nodes: tuple[int, int] = (3, 20)
    mode: SignalMode = SignalMode.COMPLEMENTARY
    strength: float = 0.8
    entropy_shift: bool = True

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0.0 <= self.balance <= 1.0:
            raise ValidationError(f"balance must be in [0, 1], got {self.balance}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        for label, (lo, hi) in (("fcg", self.fcg_nodes), ("pcg", self.pcg_nodes)):
            if lo < 1 or hi < lo:
                raise ValidationError(f"{label} node range ({lo}, {hi}) invalid")
        if not 0.0 <= self.strength <= 1.0:
            raise ValidationError(f"strength must be in [0, 1], got {self.strength}")


def _gen_fcg(rng: np.random.Generator, spec: GenSpec, cue: bool) -> Graph:
    lo, hi = spec.fcg_nodes
    n = int(rng.integers(lo, hi + 1))
    edges: list[tuple[int, int]] = []
    deg = np.zeros(n)
    for v in range(1, n):
        k = min(v, 2)
        weights = deg[:v] + 1.0
        targets = rng.choice(v, size=k, replace=False, p=weights / weights.sum())
        for t in targets:
            edges.append((v, int(t)))
            deg[v] += 1
            deg[t] += 1
    if cue:
        # hub boost: degree skew well past what attachment alone produces
        hub = int(np.argmax(deg))
        extra = max(1, round(spec.strength * 0.5 * n))
        for s in rng.choice(n, size=extra, replace=True):
            if int(s) != hub:
                edges.append((int(s), hub))
    return canonicalize(Graph(n, tuple(edges)))


def _gen_pcg(rng: np.random.Generator, spec: GenSpec, cue: bool) -> Graph:
    lo, hi = spec.pcg_nodes
    n = int(rng.integers(lo, hi + 1))
    edges: list[tuple[int, int]] = []
    if n == 1:
        pass
    elif cue:
        # deep spawn chain ending in a fan-out burst; long degree-2 runs
        # plus one high-fanout node, both rare in random recursive trees
        burst = min(max(2, round(0.5 * spec.strength * (n - 1))), n - 2) if n > 3 else 1
        chain = (n - 1) - burst
        for v in range(1, chain + 1):
            edges.append((v - 1, v))
        for v in range(chain + 1, n):
            edges.append((chain, v))
    else:
        for v in range(1, n):
            edges.append((int(rng.integers(0, v)), v))
    return canonicalize(Graph(n, tuple(edges)))


def generate(spec: GenSpec) -> Dataset:
    """Deterministic per spec: one RNG stream, draws in sample order."""
    rng = np.random.default_rng(spec.seed)
    n_mal = round(spec.n_samples * spec.balance)
    labels = np.array([1] * n_mal + [0] * (spec.n_samples - n_mal))
    labels = labels[rng.permutation(spec.n_samples)]
    samples = []
    benign_seen = 0
    for i, label in enumerate(labels.tolist()):
        if spec.mode is SignalMode.FCG_ONLY:
            cue_f, cue_p = label == 1, False
        elif spec.mode is SignalMode.PCG_ONLY:
            cue_f, cue_p = False, label == 1
        else:
            if label == 1:
                cue_f = cue_p = True
            else:
                cue_f = benign_seen % 2 == 0
                cue_p = not cue_f
                benign_seen += 1
        fcg = _gen_fcg(rng, spec, cue_f)
        pcg = _gen_pcg(rng, spec, cue_p)
        if spec.entropy_shift and label == 1:
            a, b = 8.0, 2.0
        else:
            a, b = 6.0, 3.0
        entropy = float(rng.beta(a, b) * 8.0)
        samples.append(SamplePair(f"sample{i:04d}", label, fcg, pcg, entropy))
    provenance = {
        "source": "synthetic",
        "mode": spec.mode.value,
        "n_samples": str(spec.n_samples),
        "balance": repr(spec.balance),
        "seed": str(spec.seed),
        "strength": repr(spec.strength),
        "entropy_shift": str(spec.entropy_shift),
    }
    return Dataset(tuple(samples), provenance)
