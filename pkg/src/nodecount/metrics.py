"""Confusion matrices, per-class F1, micro-averaged ROC and cutoff queries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nodecount.dataset import CLASSES
from nodecount.errors import DataError, DimensionMismatch


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """``counts[t, p]`` = examples of true class ``classes[t]`` predicted as ``classes[p]``."""

    counts: np.ndarray
    classes: tuple[int, ...] = CLASSES

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise ValueError("confusion matrices over different classes")
        return ConfusionMatrix(self.counts + other.counts, self.classes)

    def tolist(self) -> list[list[int]]:
        return self.counts.astype(int).tolist()


def confusion(true_labels, predicted, classes=CLASSES) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=int)
    p = np.asarray(predicted, dtype=int)
    if t.shape != p.shape:
        raise DimensionMismatch(f"{t.size} true labels but {p.size} predictions")
    if t.size == 0:
        raise DataError("confusion matrix of an empty evaluation")
    index = {c: i for i, c in enumerate(classes)}
    try:
        ti = np.array([index[v] for v in t])
        pi = np.array([index[v] for v in p])
    except KeyError as exc:
        raise DataError(f"label {exc.args[0]} not in {tuple(classes)}") from None
    counts = np.zeros((len(classes), len(classes)), dtype=int)
    np.add.at(counts, (ti, pi), 1)
    return ConfusionMatrix(counts, tuple(classes))


@dataclass(frozen=True)
class ClassScores:
    label: int
    precision: float
    recall: float
    f1: float
    degenerate: bool


def f1_per_class(cm: ConfusionMatrix) -> tuple[list[ClassScores], float]:
    """Per-class precision, recall and F1 plus their unweighted macro F1.

    Empty predicted columns give precision 0; F1 is 0 when P + R = 0.
    A class with neither true nor predicted examples is flagged degenerate.
    """
    counts = cm.counts
    out = []
    for i, c in enumerate(cm.classes):
        tp = counts[i, i]
        col = counts[:, i].sum()
        row = counts[i, :].sum()
        p = tp / col if col else 0.0
        r = tp / row if row else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        out.append(ClassScores(int(c), float(p), float(r), float(f1), bool(col == 0 and row == 0)))
    macro = float(np.mean([s.f1 for s in out]))
    return out, macro


# --------------------------------------------------------------------------
# ROC


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def binary_roc(is_positive, scores) -> RocCurve:
    """ROC of a scored binary instance, sweeping every distinct score.

    Tied scores move the curve diagonally in one step, so the trapezoid
    area equals the pair-counting (Mann-Whitney) statistic.
    """
    pos = np.asarray(is_positive, dtype=bool)
    s = np.asarray(scores, dtype=float)
    if pos.shape != s.shape:
        raise DimensionMismatch("labels and scores differ in length")
    if not np.all(np.isfinite(s)):
        raise DataError("ROC scores must be finite")
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both positive and negative instances")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    tp = np.cumsum(pos[order])
    fp = np.cumsum(~pos[order])
    # last index of each run of equal scores
    ends = np.flatnonzero(np.diff(s_sorted, append=-np.inf) != 0)
    tpr = np.concatenate([[0.0], tp[ends] / n_pos])
    fpr = np.concatenate([[0.0], fp[ends] / n_neg])
    thresholds = np.concatenate([[np.inf], s_sorted[ends]])
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


def roc_curve(true_labels, scores, classes=CLASSES, averaging: str = "micro") -> RocCurve:
    """Micro-averaged one-vs-rest ROC.

    ``scores`` is (M, K); every (example, class) cell becomes one binary
    instance that is positive when the class is the true label.
    """
    if averaging != "micro":
        raise ValueError(f"unsupported averaging {averaging!r}")
    y = np.asarray(true_labels, dtype=int)
    S = np.asarray(scores, dtype=float)
    if S.ndim != 2 or S.shape != (len(y), len(classes)):
        raise DimensionMismatch(f"scores shape {S.shape}, expected ({len(y)}, {len(classes)})")
    if len(np.unique(y)) < 2:
        raise DataError("ROC needs examples of at least two classes")
    onehot = y[:, None] == np.asarray(classes)[None, :]
    return binary_roc(onehot.ravel(), S.ravel())


def mann_whitney_auc(is_positive, scores) -> float:
    """Probability a random positive outscores a random negative (ties count half)."""
    pos = np.asarray(is_positive, dtype=bool)
    s = np.asarray(scores, dtype=float)
    sp, sn = s[pos], s[~pos]
    greater = (sp[:, None] > sn[None, :]).sum()
    ties = (sp[:, None] == sn[None, :]).sum()
    return float((greater + 0.5 * ties) / (len(sp) * len(sn)))


def fpr_at_tpr(curve: RocCurve, target_tpr: float = 0.95) -> float:
    """Smallest FPR reaching ``target_tpr``, interpolating linearly between sweep points."""
    if not 0 < target_tpr <= 1:
        raise ValueError("target_tpr must be in (0, 1]")
    fpr, tpr = curve.fpr, curve.tpr
    j = int(np.argmax(tpr >= target_tpr))
    if j == 0:
        return float(fpr[0])
    t0, t1 = tpr[j - 1], tpr[j]
    f0, f1 = fpr[j - 1], fpr[j]
    return float(f0 + (target_tpr - t0) / (t1 - t0) * (f1 - f0))
