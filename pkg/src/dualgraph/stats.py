"""Nonparametric comparison of configuration groups.

Pipeline: pick the top-k scores per group, run a Kruskal-Wallis omnibus
test, then Dunn's pairwise post-hoc z-tests with Bonferroni correction.
Rank statistics use midranks for ties and the standard tie corrections.

The chi-square survival value comes from the regularized upper incomplete
gamma function Q(df/2, x/2), computed by the usual series / continued
fraction split at x = a + 1 (converged to ~1e-15, comfortably inside the
1e-10 relative target).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import GraphType, ModelConfig
from .graphs import ValidationError

__all__ = [
    "ScoreGroup",
    "TestReport",
    "chi2_sf",
    "kruskal_wallis",
    "dunn_posthoc",
    "compare_groups",
    "top_k_by_group",
    "boxplot_summary",
    "write_test_report",
    "write_boxplot_csv",
]


@dataclass(frozen=True)
class ScoreGroup:
    """A named collection of validation F1 scores."""

    name: str
    scores: tuple[float, ...]

    def __post_init__(self):
        if not self.scores:
            raise ValidationError(f"group {self.name!r} is empty")
        if any(not 0.0 <= s <= 1.0 for s in self.scores):
            raise ValidationError(f"group {self.name!r} has scores outside [0, 1]")


@dataclass(frozen=True)
class TestReport:
    # not a test case; the name trips pytest collection without this
    __test__ = False

    group_names: tuple[str, ...]
    omnibus_h: float
    omnibus_p: float
    pairwise_p: tuple[tuple[float, ...], ...]
    correction: int


def _midranks(values: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """1-based ranks with ties averaged; also the sizes of tie runs > 1."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    ties: list[int] = []
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0
        ranks[order[i : j + 1]] = avg
        if j > i:
            ties.append(j - i + 1)
        i = j + 1
    return ranks, ties


def _gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x), a > 0, x >= 0."""
    if x <= 0.0:
        return 1.0
    log_prefix = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        n = 0
        while abs(term) >= abs(total) * 1e-16 and n < 2000:
            n += 1
            term *= x / (a + n)
            total += term
        return 1.0 - total * math.exp(log_prefix)
    # modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 2000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(log_prefix)


def chi2_sf(x: float, df: int) -> float:
    """P(X >= x) for a chi-square variable with df degrees of freedom."""
    if df < 1:
        raise ValidationError(f"df must be >= 1, got {df}")
    return _gamma_q(df / 2.0, x / 2.0)


def _pooled(groups: Sequence[Sequence[float]]) -> tuple[np.ndarray, list[int]]:
    if len(groups) < 2:
        raise ValidationError(f"need at least 2 groups, got {len(groups)}")
    sizes = [len(g) for g in groups]
    if any(s == 0 for s in sizes):
        raise ValidationError("every group must be non-empty")
    return np.concatenate([np.asarray(g, dtype=np.float64) for g in groups]), sizes


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Tie-corrected H statistic and its chi-square p-value (df = k - 1).

    Returns (0, 1) when every observation is identical, where the tie
    correction would otherwise divide by zero.
    """
    values, sizes = _pooled(groups)
    n = len(values)
    if np.all(values == values[0]):
        return 0.0, 1.0
    ranks, ties = _midranks(values)
    h = 0.0
    pos = 0
    for size in sizes:
        r = ranks[pos : pos + size].sum()
        h += r * r / size
        pos += size
    h = 12.0 * h / (n * (n + 1)) - 3.0 * (n + 1)
    h /= 1.0 - sum(t**3 - t for t in ties) / (n**3 - n)
    return h, chi2_sf(h, len(groups) - 1)


def dunn_posthoc(groups: Sequence[Sequence[float]]) -> tuple[tuple[float, ...], ...]:
    """Bonferroni-corrected pairwise p matrix, symmetric with unit diagonal.

    z_ij compares mean midranks with the tie-corrected pooled variance
    sigma^2 = N(N+1)/12 - sum(t^3 - t)/(12(N-1)); a non-positive variance
    (all values identical) makes every pair maximally insignificant.
    """
    values, sizes = _pooled(groups)
    n = len(values)
    k = len(groups)
    ranks, ties = _midranks(values)
    mean_ranks = []
    pos = 0
    for size in sizes:
        mean_ranks.append(ranks[pos : pos + size].mean())
        pos += size
    sigma2 = n * (n + 1) / 12.0 - sum(t**3 - t for t in ties) / (12.0 * (n - 1))
    bonferroni = k * (k - 1) // 2
    matrix = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            if sigma2 <= 0.0:
                p = 1.0
            else:
                z = (mean_ranks[i] - mean_ranks[j]) / math.sqrt(
                    sigma2 * (1.0 / sizes[i] + 1.0 / sizes[j])
                )
                p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)) * bonferroni)
            matrix[i, j] = matrix[j, i] = p
    return tuple(tuple(row) for row in matrix.tolist())


def compare_groups(groups: Sequence[ScoreGroup]) -> TestReport:
    scores = [g.scores for g in groups]
    h, p = kruskal_wallis(scores)
    return TestReport(
        group_names=tuple(g.name for g in groups),
        omnibus_h=h,
        omnibus_p=p,
        pairwise_p=dunn_posthoc(scores),
        correction=len(groups) * (len(groups) - 1) // 2,
    )


_GRAPH_GROUP_NAMES = {
    GraphType.DUAL: "both_wsum",
    GraphType.MERGED: "both_merged",
    GraphType.FCG: "single_fcg",
    GraphType.PCG: "single_pcg",
}
_GROUP_ORDERS = {
    "graph_type": ["both_wsum", "both_merged", "single_fcg", "single_pcg"],
    "feature": ["ldp", "entropy", "ldp+entropy"],
}


def _group_name(config: ModelConfig, key: str) -> str:
    if key == "graph_type":
        return _GRAPH_GROUP_NAMES[config.graph_type]
    if key == "feature":
        return config.feature.value
    raise ValidationError(f"unknown grouping key {key!r}")


def top_k_by_group(summaries, key: str, k: int = 100, source: str = "means") -> list[ScoreGroup]:
    """Best k scores per group; ``source`` picks per-config means or the
    raw per-fold scores as the pooled observations."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if source not in ("means", "folds"):
        raise ValidationError(f"unknown score source {source!r}")
    order = _GROUP_ORDERS[key] if key in _GROUP_ORDERS else None
    buckets: dict[str, list[float]] = {}
    for summary in summaries:
        name = _group_name(summary.config, key)
        scores = [summary.mean] if source == "means" else list(summary.fold_f1)
        buckets.setdefault(name, []).extend(scores)
    names = [n for n in order if n in buckets] if order else sorted(buckets)
    return [
        ScoreGroup(name, tuple(sorted(buckets[name], reverse=True)[:k])) for name in names
    ]


def boxplot_summary(group: ScoreGroup) -> dict[str, float]:
    """Five-number summary; quartiles by linear interpolation."""
    lo, q1, med, q3, hi = np.percentile(np.array(group.scores), [0, 25, 50, 75, 100])
    return {"min": float(lo), "q1": float(q1), "median": float(med), "q3": float(q3), "max": float(hi)}


def write_test_report(path, report: TestReport, comment: str) -> None:
    """Pairwise p matrix as CSV, group names on both axes, omnibus up top."""
    lines = [
        f"# {comment}",
        f"# omnibus_H={report.omnibus_h!r} omnibus_p={report.omnibus_p!r} "
        f"correction={report.correction}",
        ",".join(["group"] + list(report.group_names)),
    ]
    for name, row in zip(report.group_names, report.pairwise_p):
        lines.append(",".join([name] + [repr(p) for p in row]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_boxplot_csv(path, groups: Sequence[ScoreGroup], comment: str) -> None:
    lines = [f"# {comment}", "group,min,q1,median,q3,max"]
    for g in groups:
        s = boxplot_summary(g)
        lines.append(
            f"{g.name},{s['min']!r},{s['q1']!r},{s['median']!r},{s['q3']!r},{s['max']!r}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
