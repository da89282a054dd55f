"""Classification metrics. Kept separate so training and evaluation can
both import without a cycle."""

from __future__ import annotations

from typing import Sequence

from .graphs import ValidationError

__all__ = ["f1_score"]


def f1_score(predictions: Sequence[int], labels: Sequence[int]) -> float:
    """F1 with the malicious class (1) as positive; 0.0 when P + R = 0."""
    if len(predictions) != len(labels):
        raise ValidationError(
            f"length mismatch: {len(predictions)} predictions vs {len(labels)} labels"
        )
    if not labels:
        raise ValidationError("f1_score requires at least one sample")
    tp = fp = fn = 0
    for p, l in zip(predictions, labels):
        if p not in (0, 1) or l not in (0, 1):
            raise ValidationError("predictions and labels must be 0 or 1")
        if p == 1 and l == 1:
            tp += 1
        elif p == 1:
            fp += 1
        elif l == 1:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)
