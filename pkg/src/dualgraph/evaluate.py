"""Stratified k-fold cross-validation, grid execution, and aggregation.

A cross-validated run reports, per configuration, the five best-epoch
validation F1 scores plus mean / sample std / min / median / max. Folds
are a pure function of (labels, k, seed), so every configuration sharing a
seed is scored on identical splits and rows are comparable.
"""

from __future__ import annotations

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .config import (
    ArchKind,
    GraphType,
    ModelConfig,
    SchedulerKind,
    TrainConfig,
    config_fingerprint,
)
from .features import FeatureMode
from .graphs import Dataset, ValidationError
from .metrics import f1_score
from .train import train_run

__all__ = [
    "f1_score",
    "stratified_folds",
    "RunSummary",
    "cross_validate",
    "GridSpec",
    "run_grid",
    "write_fold_csv",
    "write_summary_csv",
    "read_fold_csv",
]


def stratified_folds(labels: Sequence[int], k: int = 5, seed: int = 0) -> list[list[int]]:
    """Partition indices into k folds with per-class counts balanced to +-1.

    Each class is shuffled and dealt out base-size chunks; the remainder
    chunks go to the folds with the smallest running totals (ties toward
    the lower fold index), which also balances overall fold sizes.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    by_class: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    totals = [0] * k
    for label in sorted(by_class):
        indices = by_class[label]
        if len(indices) < k:
            raise ValidationError(
                f"class {label} has {len(indices)} samples, fewer than k={k}"
            )
        order = [indices[j] for j in rng.permutation(len(indices))]
        base, rem = divmod(len(indices), k)
        bonus = sorted(range(k), key=lambda f: (totals[f], f))[:rem]
        sizes = [base + (1 if f in bonus else 0) for f in range(k)]
        pos = 0
        for f in range(k):
            folds[f].extend(order[pos : pos + sizes[f]])
            totals[f] += sizes[f]
            pos += sizes[f]
    return [sorted(f) for f in folds]


@dataclass(frozen=True)
class RunSummary:
    """One table row: a configuration and its per-fold validation scores."""

    config: ModelConfig
    fold_f1: tuple[float, ...]
    mean: float
    std: float
    min: float
    median: float
    max: float

    @classmethod
    def from_scores(cls, config: ModelConfig, scores: Sequence[float]) -> "RunSummary":
        arr = np.array(scores, dtype=np.float64)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        return cls(
            config,
            tuple(float(s) for s in scores),
            float(arr.mean()),
            std,
            float(arr.min()),
            float(np.median(arr)),
            float(arr.max()),
        )


def cross_validate(
    dataset: Dataset,
    config: ModelConfig,
    train_config: TrainConfig | None = None,
    k: int = 5,
) -> RunSummary:
    """Train k models, each validated on its held-out fold.

    Fold i trains with seed ``base_seed + i`` so folds differ in both data
    and initialization, while the whole run stays a pure function of the
    base seed.
    """
    base = config.resolve_train(train_config or TrainConfig())
    folds = stratified_folds(dataset.labels(), k, base.seed)
    scores = []
    for i, fold in enumerate(folds):
        held = set(fold)
        train_samples = [s for j, s in enumerate(dataset.samples) if j not in held]
        val_samples = [dataset.samples[j] for j in fold]
        result = train_run(
            train_samples, val_samples, config, replace(base, seed=base.seed + i)
        )
        scores.append(result.best_f1)
    return RunSummary.from_scores(config, scores)


@dataclass(frozen=True)
class GridSpec:
    """Cross product of configuration values, expanded in declaration order."""

    graph_types: tuple[GraphType, ...]
    features: tuple[FeatureMode, ...]
    archs: tuple[ArchKind, ...]
    layers: tuple[int, ...]
    fcs: tuple[int, ...]
    dims: tuple[int, ...]
    schedulers: tuple[SchedulerKind, ...]

    def cells(self) -> list[ModelConfig]:
        return [
            ModelConfig(
                graph_type=g, feature=f, model_arch=a, layer=l, fc=c, dim=d, scheduler=s
            )
            for g, f, a, l, c, d, s in itertools.product(
                self.graph_types,
                self.features,
                self.archs,
                self.layers,
                self.fcs,
                self.dims,
                self.schedulers,
            )
        ]


def _grid_cell(args: tuple[Dataset, ModelConfig, TrainConfig, int]) -> RunSummary:
    dataset, config, train_config, k = args
    return cross_validate(dataset, config, train_config, k)


def run_grid(
    dataset: Dataset,
    grid: GridSpec,
    train_config: TrainConfig | None = None,
    k: int = 5,
    jobs: int = 1,
) -> list[RunSummary]:
    """One summary per grid cell, sorted by mean F1 descending.

    Sorting is stable, so ties keep cell declaration order and the output
    is identical for any job count.
    """
    base = train_config or TrainConfig()
    cells = grid.cells()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_grid_cell, [(dataset, c, base, k) for c in cells]))
    else:
        summaries = [cross_validate(dataset, c, base, k) for c in cells]
    return sorted(summaries, key=lambda s: -s.mean)


_CONFIG_COLS = [
    "graph_type",
    "feature",
    "model_arch",
    "join_embeddings",
    "layer",
    "fc",
    "dim",
    "scheduler",
]


def _config_fields(config: ModelConfig) -> list[str]:
    return [
        config.graph_type.value,
        config.feature.value,
        config.model_arch.value,
        config.join_embeddings.value,
        str(config.layer),
        str(config.fc),
        str(config.dim),
        config.scheduler.value,
    ]


def _write_csv(path, comment: str, header: list[str], rows: Iterable[list[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_fold_csv(path, summaries: Sequence[RunSummary], comment: str) -> None:
    """One row per (config, fold): the raw scores behind a summary table."""
    rows = [
        _config_fields(s.config) + [str(fold), repr(f1)]
        for s in summaries
        for fold, f1 in enumerate(s.fold_f1)
    ]
    _write_csv(path, comment, _CONFIG_COLS + ["fold", "f1"], rows)


def write_summary_csv(path, summaries: Sequence[RunSummary], comment: str) -> None:
    rows = [
        _config_fields(s.config)
        + [repr(s.mean), repr(s.std), repr(s.min), repr(s.median), repr(s.max)]
        for s in summaries
    ]
    header = _CONFIG_COLS + ["mean", "std", "min", "median", "max"]
    _write_csv(path, comment, header, rows)


def read_fold_csv(path) -> list[RunSummary]:
    """Rebuild summaries from a fold-score CSV, recomputing the aggregates."""
    groups: dict[tuple, dict[int, float]] = {}
    order: list[tuple] = []
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for line_no, row in enumerate(reader, start=2):
        if row.get("f1") is None or row.get("fold") is None:
            raise ValidationError(f"{path}: line {line_no}: missing fold or f1 column")
        key = tuple(row[c] for c in _CONFIG_COLS)
        if key not in groups:
            groups[key] = {}
            order.append(key)
        groups[key][int(row["fold"])] = float(row["f1"])
    summaries = []
    for key in order:
        cfg = dict(zip(_CONFIG_COLS, key))
        config = ModelConfig(
            graph_type=GraphType.parse(cfg["graph_type"]),
            feature=FeatureMode.parse(cfg["feature"]),
            model_arch=ArchKind.parse(cfg["model_arch"]),
            layer=int(cfg["layer"]),
            fc=int(cfg["fc"]),
            dim=int(cfg["dim"]),
            scheduler=SchedulerKind.parse(cfg["scheduler"]),
        )
        by_fold = groups[key]
        scores = [by_fold[f] for f in sorted(by_fold)]
        summaries.append(RunSummary.from_scores(config, scores))
    return summaries
