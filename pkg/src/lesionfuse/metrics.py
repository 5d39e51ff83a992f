"""Classification metrics: accuracy, macro F1, macro OVR ROC-AUC and AP.

Conventions, fixed so results match a brute-force oracle exactly:
argmax breaks ties toward the lowest class index; per-class F1 uses
0/0 := 0; ROC-AUC uses average ranks for tied scores (Mann-Whitney);
average precision sums precision at each distinct threshold weighted by
the recall step.  Classes with no positive examples in the true labels
are excluded from every macro average; ROC-AUC additionally needs at
least one negative.
"""

from dataclasses import dataclass

import numpy as np

from lesionfuse.core import LABELS
from lesionfuse.errors import DataError

N_CLASSES = len(LABELS)

_SIMPLEX_TOL = 1e-6


def validate_posteriors(posteriors):
    p = np.asarray(posteriors, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != N_CLASSES:
        raise DataError(f"posteriors must be (n, {N_CLASSES})")
    if not np.isfinite(p).all():
        raise DataError("posteriors contain non-finite values")
    if (p < -_SIMPLEX_TOL).any():
        raise DataError("posterior entries below 0")
    if np.abs(p.sum(axis=1) - 1.0).max() > _SIMPLEX_TOL:
        raise DataError("posterior rows do not sum to 1")
    return p


def predicted_labels(posteriors) -> np.ndarray:
    """Argmax per row, lowest class index on ties."""
    return np.argmax(posteriors, axis=1)


def confusion_matrix(true_labels, pred_labels) -> np.ndarray:
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(cm, (true_labels, pred_labels), 1)
    return cm


def _average_ranks(scores) -> np.ndarray:
    """1-based ranks with tied values sharing their average rank."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    n = scores.shape[0]
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def roc_auc_binary(scores, positives) -> float:
    """Mann-Whitney AUC; requires at least one positive and one negative."""
    n_pos = int(positives.sum())
    n_neg = positives.shape[0] - n_pos
    ranks = _average_ranks(np.asarray(scores, dtype=np.float64))
    rank_sum = float(ranks[positives].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision_binary(scores, positives) -> float:
    """Step-wise AP over distinct thresholds, descending, ties grouped."""
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(positives.sum())
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = positives[order]
    ap = 0.0
    recall_prev = 0.0
    tp = 0
    seen = 0
    i = 0
    n = scores.shape[0]
    while i < n:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        tp += int(y[i:j + 1].sum())
        seen += j - i + 1
        recall = tp / n_pos
        precision = tp / seen
        ap += (recall - recall_prev) * precision
        recall_prev = recall
        i = j + 1
    return ap


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_f1: float
    macro_ap: float
    macro_auc: float
    confusion: np.ndarray
    per_class: tuple

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "macro_ap": self.macro_ap,
            "macro_auc": self.macro_auc,
            "confusion": self.confusion.tolist(),
            "per_class": list(self.per_class),
        }


def compute_metrics(true_labels, posteriors) -> MetricsReport:
    y = np.asarray(true_labels, dtype=np.int64)
    if y.shape[0] == 0:
        raise DataError("no samples to score")
    p = validate_posteriors(posteriors)
    if p.shape[0] != y.shape[0]:
        raise DataError("label/posterior length mismatch")
    pred = predicted_labels(p)
    cm = confusion_matrix(y, pred)
    accuracy = float((pred == y).mean())

    per_class = []
    f1s = []
    aps = []
    aucs = []
    for c in range(N_CLASSES):
        tp = int(cm[c, c])
        fp = int(cm[:, c].sum() - tp)
        fn = int(cm[c, :].sum() - tp)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        entry = {
            "label": LABELS[c],
            "support": support,
            "precision": precision,
            "recall": recall,
            "f1": f1,
        }
        if support > 0:
            f1s.append(f1)
            positives = y == c
            entry["average_precision"] = average_precision_binary(
                p[:, c], positives
            )
            aps.append(entry["average_precision"])
            if support < y.shape[0]:
                entry["roc_auc"] = roc_auc_binary(p[:, c], positives)
                aucs.append(entry["roc_auc"])
        per_class.append(entry)

    return MetricsReport(
        accuracy=accuracy,
        macro_f1=float(np.mean(f1s)) if f1s else 0.0,
        macro_ap=float(np.mean(aps)) if aps else 0.0,
        macro_auc=float(np.mean(aucs)) if aucs else 0.0,
        confusion=cm,
        per_class=tuple(per_class),
    )
