"""Classification and regression metrics for model reporting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class EvaluateError(Exception):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts; rows are true classes, columns predicted."""

    counts: np.ndarray
    labels: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": self.counts.tolist()}


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    zero_division: bool = False  # a denominator was empty; metric reported as 0


@dataclass(frozen=True)
class ClassificationReport:
    per_class: tuple[ClassMetrics, ...]
    labels: tuple[str, ...]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float

    def to_dict(self) -> dict:
        return {
            "per_class": {
                label: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                    "zero_division": m.zero_division,
                }
                for label, m in zip(self.labels, self.per_class)
            },
            "accuracy": self.accuracy,
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        """Fixed-width table: per-class rows, then accuracy and averages."""
        width = max(len(lab) for lab in self.labels + ("Weighted Average",))
        lines = [f"{'':<{width}}  Precision  Recall  F1-score  Support"]
        for label, m in zip(self.labels, self.per_class):
            lines.append(
                f"{label:<{width}}  {m.precision:>9.2f}  {m.recall:>6.2f}  {m.f1:>8.2f}  {m.support:>7d}"
            )
        total = sum(m.support for m in self.per_class)
        lines.append(f"{'Accuracy':<{width}}  {'':>9}  {'':>6}  {self.accuracy:>8.2f}  {total:>7d}")
        lines.append(
            f"{'Macro Average':<{width}}  {self.macro_precision:>9.2f}  {self.macro_recall:>6.2f}"
            f"  {self.macro_f1:>8.2f}  {total:>7d}"
        )
        lines.append(
            f"{'Weighted Average':<{width}}  {self.weighted_precision:>9.2f}  {self.weighted_recall:>6.2f}"
            f"  {self.weighted_f1:>8.2f}  {total:>7d}"
        )
        return "\n".join(lines)


@dataclass(frozen=True)
class RegressionMetrics:
    mae: float
    rmse: float
    r2: float | None  # None when y_true is constant (flagged, not a number)

    @property
    def r2_defined(self) -> bool:
        return self.r2 is not None

    def to_dict(self) -> dict:
        return {"mae": self.mae, "rmse": self.rmse, "r2": self.r2}


def confusion(y_true: Sequence[int], y_pred: Sequence[int], n_classes: int,
              labels: Sequence[str] | None = None) -> ConfusionMatrix:
    yt = np.asarray(y_true, dtype=np.int64)
    yp = np.asarray(y_pred, dtype=np.int64)
    if yt.size == 0:
        raise EvaluateError("empty input")
    if yt.shape != yp.shape:
        raise EvaluateError(f"length mismatch: {yt.shape} vs {yp.shape}")
    if yt.min() < 0 or yt.max() >= n_classes or yp.min() < 0 or yp.max() >= n_classes:
        raise EvaluateError(f"labels must be in 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (yt, yp), 1)
    if labels is None:
        labels = tuple(str(k) for k in range(n_classes))
    return ConfusionMatrix(counts, tuple(labels))


def report(cm: ConfusionMatrix) -> ClassificationReport:
    """Precision, recall and F1 per class plus macro and support-weighted averages.

    Zero-denominator cells are reported as 0 with a flag; a class with zero
    support contributes nothing to the weighted averages.
    """
    counts = cm.counts
    k = counts.shape[0]
    per_class = []
    for c in range(k):
        tp = float(counts[c, c])
        col = float(counts[:, c].sum())
        row = float(counts[c, :].sum())
        precision = tp / col if col > 0 else 0.0
        recall = tp / row if row > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(ClassMetrics(precision, recall, f1, int(row), col == 0 or row == 0))
    supports = np.array([m.support for m in per_class], dtype=np.float64)
    total = supports.sum()
    precisions = np.array([m.precision for m in per_class])
    recalls = np.array([m.recall for m in per_class])
    f1s = np.array([m.f1 for m in per_class])
    return ClassificationReport(
        per_class=tuple(per_class),
        labels=cm.labels,
        accuracy=cm.accuracy,
        macro_precision=float(precisions.mean()),
        macro_recall=float(recalls.mean()),
        macro_f1=float(f1s.mean()),
        weighted_precision=float((precisions * supports).sum() / total),
        weighted_recall=float((recalls * supports).sum() / total),
        weighted_f1=float((f1s * supports).sum() / total),
    )


def regression(y_true: Sequence[float], y_pred: Sequence[float]) -> RegressionMetrics:
    """MAE, RMSE and R^2 (about the mean of y_true; None for constant truth)."""
    yt = np.asarray(y_true, dtype=np.float64)
    yp = np.asarray(y_pred, dtype=np.float64)
    if yt.size == 0:
        raise EvaluateError("empty input")
    if yt.shape != yp.shape:
        raise EvaluateError(f"length mismatch: {yt.shape} vs {yp.shape}")
    err = yp - yt
    mae = float(np.abs(err).mean())
    rmse = float(math.sqrt(np.mean(err**2)))
    ss_tot = float(((yt - yt.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = None
    else:
        r2 = 1.0 - float((err**2).sum()) / ss_tot
    return RegressionMetrics(mae, rmse, r2)
