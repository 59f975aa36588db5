"""Binary confusion-matrix metrics.

A zero denominator yields 0.0 together with an :class:`UndefinedMetricWarning`
instead of an exception, so a degenerate classifier inside a tuning loop
scores low rather than aborting the run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class UndefinedMetricWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """The same counts seen with the other class as positive."""
        return ConfusionMatrix(tp=self.tn, tn=self.tp, fp=self.fn, fn=self.fp)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


def confusion(predictions, truth, positive_class, labels=None) -> ConfusionMatrix:
    """Count outcomes with ``positive_class`` as the positive label.

    ``labels`` is the binary label set; by default the union of labels seen
    in ``truth`` and ``predictions``, which must have at most two members.
    """
    pred = np.asarray(predictions)
    true = np.asarray(truth)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValueError(f"length mismatch: {pred.shape} predictions vs {true.shape} labels")
    if pred.size == 0:
        raise ValueError("no predictions to score")
    allowed = set(np.unique(np.concatenate([true, pred])).tolist()) if labels is None else set(labels)
    allowed.add(positive_class)
    if len(allowed) > 2:
        raise ValueError(f"labels outside a binary set: {sorted(map(str, allowed))}")
    seen = set(np.unique(np.concatenate([true, pred])).tolist())
    if not seen <= allowed:
        raise ValueError(f"unexpected labels {sorted(map(str, seen - allowed))}")
    p = pred == positive_class
    t = true == positive_class
    return ConfusionMatrix(
        tp=int(np.sum(p & t)), tn=int(np.sum(~p & ~t)),
        fp=int(np.sum(p & ~t)), fn=int(np.sum(~p & t)),
    )


def _ratio(num, den, what):
    if den == 0:
        warnings.warn(f"{what} is undefined (zero denominator); reporting 0.0",
                      UndefinedMetricWarning, stacklevel=3)
        return 0.0
    return num / den


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    return (cm.tp + cm.tn) / cm.total


def precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp, "precision")


def recall(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn, "recall")


def f_measure(cm: ConfusionMatrix, beta: float = 1.0) -> float:
    """F-beta score ``(1 + b^2) P R / (b^2 P + R)``."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetricWarning)
        p, r = precision(cm), recall(cm)
    b2 = beta * beta
    return _ratio((1 + b2) * p * r, b2 * p + r, "F-measure")


def weighted_f(f1: float, f2: float, n1: int, n2: int) -> float:
    total = n1 + n2
    if n1 < 0 or n2 < 0 or total == 0:
        raise ValueError("class counts must be non-negative with a positive total")
    return n1 / total * f1 + n2 / total * f2


def classification_report(truth, predictions, positive_class, negative_class=None, beta: float = 1.0) -> dict:
    """Metric summary with ``positive_class`` (normally the minority) as positive.

    Per-class F values use each class in turn as the positive label, and
    ``weighted_f`` weights them by the class sizes in ``truth``.
    """
    true = np.asarray(truth)
    if negative_class is None:
        others = sorted(set(np.unique(np.concatenate([true, np.asarray(predictions)])).tolist())
                        - {positive_class}, key=str)
        if len(others) > 1:
            raise ValueError(f"labels outside a binary set: {others}")
        negative_class = others[0] if others else None
    labels = [positive_class] if negative_class is None else [positive_class, negative_class]
    cm = confusion(predictions, truth, positive_class, labels=labels)
    f_pos = f_measure(cm, beta)
    f_neg = f_measure(cm.swapped(), beta)
    n_pos = cm.tp + cm.fn
    n_neg = cm.tn + cm.fp
    return {
        "positive_class": _plain(positive_class),
        "accuracy": accuracy(cm),
        "precision": precision(cm),
        "recall": recall(cm),
        "f_measure": {str(_plain(positive_class)): f_pos, str(_plain(negative_class)): f_neg},
        "weighted_f": weighted_f(f_pos, f_neg, n_pos, n_neg),
        "confusion": cm.as_dict(),
    }


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v
