"""One-vs-rest confusion counts and macro precision / recall / F."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    classes: tuple
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def total(self) -> int:
        return int(self.tp[0] + self.fp[0] + self.fn[0] + self.tn[0])

    def per_class(self, label) -> dict:
        i = self.classes.index(label)
        return {"TP": int(self.tp[i]), "FP": int(self.fp[i]), "FN": int(self.fn[i]), "TN": int(self.tn[i])}


def confusion(truth: Sequence, predicted: Sequence, classes: Sequence | None = None) -> ConfusionCounts:
    truth, predicted = list(truth), list(predicted)
    if len(truth) != len(predicted):
        raise ValueError(f"length mismatch: {len(truth)} truths vs {len(predicted)} predictions")
    if classes is None:
        classes = sorted(set(truth) | set(predicted))
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    unknown = (set(truth) | set(predicted)) - set(index)
    if unknown:
        raise ValueError(f"labels not in class set: {sorted(map(str, unknown))}")
    t = np.array([index[x] for x in truth], dtype=np.int64)
    p = np.array([index[x] for x in predicted], dtype=np.int64)
    m = len(classes)
    tp = np.bincount(t[t == p], minlength=m)
    fp = np.bincount(p, minlength=m) - tp
    fn = np.bincount(t, minlength=m) - tp
    tn = len(t) - tp - fp - fn
    return ConfusionCounts(classes, tp, fp, fn, tn)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # zero denominator contributes 0
    out = np.zeros(len(num))
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def precision_recall_f(counts: ConfusionCounts) -> tuple[float, float, float]:
    """Macro-averaged precision and recall, and their harmonic mean."""
    p = float(np.mean(_ratio(counts.tp, counts.tp + counts.fp)))
    r = float(np.mean(_ratio(counts.tp, counts.tp + counts.fn)))
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def accuracy(truth: Sequence, predicted: Sequence) -> float:
    truth, predicted = list(truth), list(predicted)
    if len(truth) != len(predicted):
        raise ValueError("length mismatch")
    if not truth:
        raise ValueError("accuracy of an empty prediction set is undefined")
    return sum(a == b for a, b in zip(truth, predicted)) / len(truth)
