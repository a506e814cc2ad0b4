"""ROC curve, AUC, and accuracy for binary scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError, ShapeError


@dataclass
class RocCurve:
    """Operating points swept over descending score thresholds.

    Points start at (0, 0) and end at (1, 1); tied scores are grouped at a
    single threshold, which makes the trapezoid area equal the tie-corrected
    rank statistic. The leading threshold is +inf (nothing predicted positive).
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def rows(self):
        return list(zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist()))


def _validate_scores_labels(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape or scores.ndim != 1 or scores.size == 0:
        raise ShapeError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    return scores, labels


def roc_curve(scores: np.ndarray, labels: np.ndarray) -> RocCurve:
    scores, labels = _validate_scores_labels(scores, labels)
    n_pos = float(np.sum(labels == 1))
    n_neg = float(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC requires at least one positive and one negative label")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    cum_tp = np.cumsum(sorted_labels == 1)
    cum_fp = np.cumsum(sorted_labels == 0)
    # last index of each tie group
    distinct = np.nonzero(np.diff(sorted_scores, append=np.nan))[0]
    tpr = np.concatenate([[0.0], cum_tp[distinct] / n_pos])
    fpr = np.concatenate([[0.0], cum_fp[distinct] / n_neg])
    thresholds = np.concatenate([[np.inf], sorted_scores[distinct]])
    return RocCurve(fpr, tpr, thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve, integrated over the FPR axis."""
    x, y = curve.fpr, curve.tpr
    return float(0.5 * np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])))


def auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    return auc(roc_curve(scores, labels))


def accuracy(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    scores, labels = _validate_scores_labels(scores, labels)
    return float(np.mean((scores >= threshold) == (labels == 1)))
