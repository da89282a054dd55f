"""Run configuration: one grid cell plus training hyperparameters."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from .features import FeatureMode
from .graphs import ValidationError

__all__ = [
    "ArchKind",
    "GraphType",
    "JoinMode",
    "SchedulerKind",
    "TrainConfig",
    "ModelConfig",
    "config_fingerprint",
]


class ArchKind(enum.Enum):
    GCN = "gcn"
    GIN = "gin"
    SAGE = "sage"
    SGC = "sgc"
    MLP = "mlp"

    @classmethod
    def parse(cls, text: str) -> "ArchKind":
        for kind in cls:
            if kind.value == text:
                return kind
        raise ValidationError(f"unknown architecture {text!r}")


class GraphType(enum.Enum):
    FCG = "fcg"
    PCG = "pcg"
    MERGED = "merged"
    DUAL = "dual"

    @classmethod
    def parse(cls, text: str) -> "GraphType":
        for kind in cls:
            if kind.value == text:
                return kind
        raise ValidationError(f"unknown graph type {text!r}")


class JoinMode(enum.Enum):
    WSUM = "wsum"
    MERGED = "merged"
    NONE = "none"


class SchedulerKind(enum.Enum):
    ONECYCLE = "onecycle"
    PLATEAU = "plateau"

    @classmethod
    def parse(cls, text: str) -> "SchedulerKind":
        for kind in cls:
            if kind.value == text:
                return kind
        raise ValidationError(f"unknown scheduler {text!r}")


def _join_for(graph_type: GraphType) -> JoinMode:
    if graph_type is GraphType.DUAL:
        return JoinMode.WSUM
    if graph_type is GraphType.MERGED:
        return JoinMode.MERGED
    return JoinMode.NONE


@dataclass(frozen=True)
class TrainConfig:
    """Per-run training hyperparameters.

    ``base_lr`` is the peak rate for the one-cycle schedule and the
    starting rate for the plateau schedule.
    """

    epochs: int = 100
    batch_size: int = 32
    base_lr: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.base_lr <= 0:
            raise ValidationError(f"base_lr must be > 0, got {self.base_lr}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class ModelConfig:
    """One grid cell: input modality, features, encoder, and head shape."""

    graph_type: GraphType
    feature: FeatureMode
    model_arch: ArchKind
    layer: int
    fc: int
    dim: int
    scheduler: SchedulerKind
    join_embeddings: JoinMode | None = None
    train_overrides: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.join_embeddings is None:
            object.__setattr__(self, "join_embeddings", _join_for(self.graph_type))
        elif self.join_embeddings is not _join_for(self.graph_type):
            raise ValidationError(
                f"join_embeddings {self.join_embeddings.value!r} is inconsistent "
                f"with graph_type {self.graph_type.value!r}"
            )
        if self.layer < 1:
            raise ValidationError(f"layer must be >= 1, got {self.layer}")
        if self.fc < 1:
            raise ValidationError(f"fc must be >= 1, got {self.fc}")
        if self.dim < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")
        object.__setattr__(self, "train_overrides", dict(self.train_overrides))

    def resolve_train(self, base: TrainConfig, seed: int | None = None) -> TrainConfig:
        """Apply this config's overrides (and optionally a seed) to ``base``."""
        cfg = replace(base, **self.train_overrides) if self.train_overrides else base
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        return cfg

    def describe(self) -> dict[str, Any]:
        return {
            "graph_type": self.graph_type.value,
            "feature": self.feature.value,
            "model_arch": self.model_arch.value,
            "join_embeddings": self.join_embeddings.value,  # type: ignore[union-attr]
            "layer": self.layer,
            "fc": self.fc,
            "dim": self.dim,
            "scheduler": self.scheduler.value,
            "train_overrides": dict(sorted(self.train_overrides.items())),
        }


def config_fingerprint(config: ModelConfig, train: TrainConfig | None = None) -> str:
    """Stable hex digest identifying a (model, training) configuration."""
    payload: dict[str, Any] = {"model": config.describe()}
    if train is not None:
        payload["train"] = {
            "epochs": train.epochs,
            "batch_size": train.batch_size,
            "base_lr": train.base_lr,
            "seed": train.seed,
        }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]
