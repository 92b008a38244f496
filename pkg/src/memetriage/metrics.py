"""Evaluation: auROC, thresholded classification metrics, cross-validation.

auROC is the probability a random positive outranks a random negative with
ties counted half, computed from midranks so it is exact for exact inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CrossValidationError, DataValidationError


def auroc(scores, labels) -> float:
    """Rank-based area under the ROC curve; ties get 1/2 credit."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataValidationError("auroc requires both classes present")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # midrank for the tie group spanning [i, j], 1-based
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def classification_metrics(scores, labels, threshold: float = 0.5) -> tuple[float, float, float]:
    """(accuracy, precision, recall) with predicted-positive iff score >= threshold.

    Precision is 0 by convention when nothing is predicted positive.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if not 0.0 < threshold < 1.0:
        raise DataValidationError(f"threshold must be in (0, 1), got {threshold}")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataValidationError("classification metrics require both classes present")
    predicted = scores >= threshold
    tp = int((predicted & (labels == 1)).sum())
    fp = int((predicted & (labels == 0)).sum())
    fn = int((~predicted & (labels == 1)).sum())
    tn = int((~predicted & (labels == 0)).sum())
    accuracy = (tp + tn) / len(labels)
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = tp / (tp + fn)
    return (accuracy, precision, recall)


@dataclass
class EvalReport:
    auroc: float
    accuracy: float
    precision: float
    recall: float
    threshold: float
    n_pos: int
    n_neg: int
    folds: "list[EvalReport] | None" = None

    def to_dict(self) -> dict:
        out = {
            "auroc": self.auroc,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "threshold": self.threshold,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
        }
        if self.folds is not None:
            out["folds"] = [f.to_dict() for f in self.folds]
        return out

    def lines(self) -> list[str]:
        return [
            f"auroc {self.auroc:.6f}",
            f"accuracy {self.accuracy:.6f}",
            f"precision {self.precision:.6f}",
            f"recall {self.recall:.6f}",
            f"threshold {self.threshold}",
            f"n_pos {self.n_pos}",
            f"n_neg {self.n_neg}",
        ]


def evaluate_scores(scores, labels, threshold: float = 0.5) -> EvalReport:
    accuracy, precision, recall = classification_metrics(scores, labels, threshold)
    labels = np.asarray(labels)
    return EvalReport(
        auroc=auroc(scores, labels),
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        threshold=threshold,
        n_pos=int((labels == 1).sum()),
        n_neg=int((labels == 0).sum()),
    )


@dataclass
class CrossValReport:
    folds: list[EvalReport]
    mean: dict[str, float]
    std: dict[str, float]

    def lines(self) -> list[str]:
        out = []
        for i, fold in enumerate(self.folds):
            out.append(
                f"fold {i} auroc {fold.auroc:.6f} accuracy {fold.accuracy:.6f} "
                f"precision {fold.precision:.6f} recall {fold.recall:.6f}"
            )
        for key in ("auroc", "accuracy", "precision", "recall"):
            out.append(f"mean_{key} {self.mean[key]:.6f} std_{key} {self.std[key]:.6f}")
        return out

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean": self.mean,
            "std": self.std,
        }


def cross_validate(
    trainer,
    folds: list[tuple[list[str], list[str]]],
    labels_by_id: dict[str, int],
    threshold: float = 0.5,
) -> CrossValReport:
    """Train on each fold's train side and evaluate its holdout.

    ``trainer(train_ids, holdout_ids)`` must return holdout scores aligned
    with ``holdout_ids``. Trainer errors are re-raised naming the fold.
    """
    if len(folds) < 2:
        raise DataValidationError("cross-validation needs at least 2 folds")
    reports: list[EvalReport] = []
    for i, (train_ids, holdout_ids) in enumerate(folds):
        try:
            scores = trainer(train_ids, holdout_ids)
        except Exception as exc:
            raise CrossValidationError(f"fold {i}: {exc}") from exc
        labels = [labels_by_id[mid] for mid in holdout_ids]
        reports.append(evaluate_scores(scores, labels, threshold))
    mean = {}
    std = {}
    for key in ("auroc", "accuracy", "precision", "recall"):
        values = [getattr(r, key) for r in reports]
        mean[key] = float(np.mean(values))
        std[key] = float(np.std(values, ddof=1))
    return CrossValReport(folds=reports, mean=mean, std=std)
