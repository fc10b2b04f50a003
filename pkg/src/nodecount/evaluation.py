"""Cross-validated evaluation of one classifier on one dataset."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from nodecount.dataset import CLASSES, Dataset, FoldPlan, SubsampleSpec, subsample_folds
from nodecount.eta import PredictionDistribution, empirical_distribution
from nodecount.metrics import (
    ClassScores,
    ConfusionMatrix,
    RocCurve,
    confusion,
    f1_per_class,
    fpr_at_tpr,
    roc_curve,
)
from nodecount.models import ClassifierSpec


@dataclass(frozen=True, eq=False)
class FoldResult:
    fold: int
    test_indices: np.ndarray
    predictions: np.ndarray
    scores: np.ndarray
    confusion: ConfusionMatrix
    per_class: list[ClassScores]
    macro_f1: float
    scaling: dict | None
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class CVResult:
    spec: ClassifierSpec
    dataset: Dataset
    folds: list[FoldResult]

    @property
    def f1_matrix(self) -> np.ndarray:
        """Per-fold F1, shape (folds, classes)."""
        return np.array([[s.f1 for s in f.per_class] for f in self.folds])

    @property
    def f1_mean(self) -> np.ndarray:
        return self.f1_matrix.mean(axis=0)

    @property
    def f1_sd(self) -> np.ndarray:
        return self.f1_matrix.std(axis=0, ddof=1)

    @property
    def precision_mean(self) -> np.ndarray:
        return np.array([[s.precision for s in f.per_class] for f in self.folds]).mean(axis=0)

    @property
    def recall_mean(self) -> np.ndarray:
        return np.array([[s.recall for s in f.per_class] for f in self.folds]).mean(axis=0)

    @property
    def macro_f1(self) -> float:
        return float(np.mean([f.macro_f1 for f in self.folds]))

    @property
    def macro_f1_sd(self) -> float:
        return float(np.std([f.macro_f1 for f in self.folds], ddof=1))

    @property
    def confusion(self) -> ConfusionMatrix:
        total = self.folds[0].confusion
        for f in self.folds[1:]:
            total = total + f.confusion
        return total

    @property
    def evaluated_indices(self) -> np.ndarray:
        return np.concatenate([f.test_indices for f in self.folds])

    def pooled(self) -> tuple[np.ndarray, np.ndarray]:
        """True labels and scores of every held-out example, in fold order."""
        idx = self.evaluated_indices
        return self.dataset.labels[idx], np.vstack([f.scores for f in self.folds])

    def roc(self) -> RocCurve:
        y, scores = self.pooled()
        return roc_curve(y, scores)

    def fpr_at_tpr(self, target: float = 0.95) -> float:
        return fpr_at_tpr(self.roc(), target)

    def pred_distribution(self) -> PredictionDistribution:
        return empirical_distribution(self.confusion)

    @property
    def warnings(self) -> list[str]:
        return [f"fold {f.fold}: {w}" for f in self.folds for w in f.warnings]


def evaluate_fold(dataset: Dataset, plan: FoldPlan, fold: int, spec: ClassifierSpec) -> FoldResult:
    train, test = plan.split(fold)
    X = dataset.X
    y = dataset.labels
    trained = spec.fit(X[train], y[train], classes=CLASSES)
    pred, scores = trained.predict_scores(X[test])
    cm = confusion(y[test], pred)
    per_class, macro = f1_per_class(cm)
    return FoldResult(
        fold=fold,
        test_indices=test,
        predictions=pred,
        scores=scores,
        confusion=cm,
        per_class=per_class,
        macro_f1=macro,
        scaling=None if trained.scaling is None else trained.scaling.to_dict(),
        warnings=trained.warnings,
    )


def cross_validate(
    dataset: Dataset,
    folds: FoldPlan,
    spec: ClassifierSpec,
    subsample: SubsampleSpec | None = None,
) -> CVResult:
    """Train on all folds but one, test on the held-out fold, for every fold.

    With ``subsample`` the fold structure is kept and each fold is reduced
    to the requested class proportions before training and testing.
    """
    if subsample is not None:
        dataset, folds = subsample_folds(dataset, folds, subsample)
    results = [evaluate_fold(dataset, folds, f, spec) for f in range(folds.fold_count)]
    return CVResult(spec, dataset, results)
