"""Binary skill scores (TPR, TNR, R-score / TSS) and ROC AUC."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fn: int = 0
    tn: int = 0
    fp: int = 0

    def __post_init__(self):
        for name in ("tp", "fn", "tn", "fp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fn + other.fn, self.tn + other.tn, self.fp + other.fp
        )

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.tn + self.fp

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "tn": self.tn, "fp": self.fp}


@dataclass(frozen=True)
class SkillReport:
    """Rates are ``None`` when their denominator is zero."""

    tpr: float | None
    tnr: float | None
    r_score: float | None
    n_pos: int
    n_neg: int

    @property
    def defined(self) -> bool:
        return self.r_score is not None


def confusion(pairs: Iterable[tuple[int, int]]) -> ConfusionCounts:
    """Count (predicted, true) label pairs."""
    tp = fn = tn = fp = 0
    for pred, true in pairs:
        if true:
            if pred:
                tp += 1
            else:
                fn += 1
        elif pred:
            fp += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fn, tn, fp)


def confusion_arrays(predicted, observed) -> ConfusionCounts:
    p = np.asarray(predicted, dtype=bool)
    o = np.asarray(observed, dtype=bool)
    return ConfusionCounts(
        int(np.sum(p & o)), int(np.sum(~p & o)), int(np.sum(~p & ~o)), int(np.sum(p & ~o))
    )


def skill(counts: ConfusionCounts) -> SkillReport:
    n_pos = counts.tp + counts.fn
    n_neg = counts.tn + counts.fp
    tpr = counts.tp / n_pos if n_pos else None
    tnr = counts.tn / n_neg if n_neg else None
    r = tpr + tnr - 1.0 if tpr is not None and tnr is not None else None
    return SkillReport(tpr, tnr, r, n_pos, n_neg)


def roc_auc(scores, labels) -> float | None:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie).

    Returns ``None`` when only one class is present.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s)  # midranks give ties half credit
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """(FPR, TPR) points sweeping the threshold down through distinct scores."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC curve needs both classes")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    tps = np.cumsum(y_sorted)
    fps = np.cumsum(~y_sorted)
    last_of_tie = np.r_[np.diff(s_sorted) != 0, True]
    tpr = np.r_[0.0, tps[last_of_tie] / n_pos]
    fpr = np.r_[0.0, fps[last_of_tie] / n_neg]
    return fpr, tpr


def auc_trapezoid(scores, labels) -> float | None:
    try:
        fpr, tpr = roc_curve(scores, labels)
    except ValueError:
        return None
    return float(np.trapezoid(tpr, fpr))
