"""Uniform configuration and prediction interface over NB, OvO-SVM and kNN."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from nodecount import bayes, knn, svm
from nodecount.dataset import CLASSES, ScalingParams, standardize
from nodecount.errors import ConfigError

KINDS = ("nb", "svm", "knn")


@dataclass(frozen=True)
class ClassifierSpec:
    """Hyperparameters for one classifier family.

    Only the fields of the chosen ``kind`` are used. ``standardize=None``
    means the family default: on for everything except Poisson NB, whose
    pmf needs ETA in raw seconds.
    """

    kind: str = "svm"
    # naive Bayes
    likelihood: str = "gaussian"
    prior: str = "uniform"
    conditioning: bool = True
    # SVM
    kernel: str = "rbf"
    cost: float = 1.0
    gamma: float | None = None
    weighted: bool = False
    tol: float = svm.DEFAULT_TOL
    max_iter: int = svm.DEFAULT_MAX_ITER
    # kNN
    k: int = knn.DEFAULT_K
    standardize: bool | None = None
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"classifier kind must be one of {KINDS}, got {self.kind!r}")
        try:
            bayes.Likelihood(self.likelihood)
            bayes.Prior(self.prior)
            svm.KernelKind(self.kernel)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.cost > 0:
            raise ConfigError("SVM cost must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("RBF gamma must be positive")
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ConfigError("k must be a positive integer")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "nb":
            tag = "NB" if self.likelihood == "gaussian" else "NB-Poisson"
            return f"{tag} ({self.prior if self.prior == 'uniform' else 'prior'})"
        if self.kind == "svm":
            tag = "SVM-L" if self.kernel == "linear" else "SVM-R"
            return f"{tag} ({'weight' if self.weighted else 'no weight'})"
        return f"kNN (k={self.k})"

    @property
    def scaled(self) -> bool:
        if self.standardize is not None:
            return self.standardize
        return not (self.kind == "nb" and self.likelihood == "poisson")

    def to_dict(self) -> dict:
        keys = {
            "nb": ("likelihood", "prior", "conditioning"),
            "svm": ("kernel", "cost", "gamma", "weighted", "tol", "max_iter"),
            "knn": ("k",),
        }[self.kind]
        d = asdict(self)
        out = {"kind": self.kind, "name": self.label}
        out.update({k: d[k] for k in keys})
        out["standardize"] = self.scaled
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ClassifierSpec":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown classifier keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def fit(self, X, y, classes=CLASSES) -> "TrainedClassifier":
        X = np.asarray(X, dtype=float)
        scaling = None
        if self.scaled:
            X, _, scaling = standardize(X)
        if self.kind == "nb":
            model = bayes.fit(X, y, bayes.Likelihood(self.likelihood), bayes.Prior(self.prior),
                              conditioning=self.conditioning, classes=classes)
        elif self.kind == "svm":
            kernel = svm.Kernel(svm.KernelKind(self.kernel), self.gamma)
            model = svm.fit_ovo(X, y, kernel, self.cost,
                                class_weights="balanced" if self.weighted else None,
                                classes=classes, tol=self.tol, max_iter=self.max_iter)
        else:
            model = knn.fit(X, y, self.k, classes=classes)
        return TrainedClassifier(self, model, scaling)


@dataclass(frozen=True, eq=False)
class TrainedClassifier:
    spec: ClassifierSpec
    model: object
    scaling: ScalingParams | None = None

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.model.classes)

    @property
    def warnings(self) -> list[str]:
        if isinstance(self.model, svm.OvoSvmModel):
            return [
                f"SVM pair {m.class_pair} did not converge in {m.iterations} iterations"
                for m in self.model.binary_models
                if not m.converged
            ]
        return []

    def predict_scores(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Predicted labels (M,) and per-class ranking scores (M, K)."""
        X = np.asarray(X, dtype=float)
        if self.scaling is not None:
            X = self.scaling.transform(X)
        if isinstance(self.model, bayes.NaiveBayesModel):
            _, probs = bayes.posterior(self.model, X)
            return bayes.predict(self.model, X), probs
        if isinstance(self.model, svm.OvoSvmModel):
            labels, _, scores = svm.predict_ovo(self.model, X)
            return labels, scores
        return knn.predict(self.model, X)

    def predict(self, X) -> np.ndarray:
        return self.predict_scores(X)[0]

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "scaling": None if self.scaling is None else self.scaling.to_dict(),
            "model": self.model.to_dict(),
        }


def standard_classifiers() -> list[ClassifierSpec]:
    """NB, SVM-L, SVM-R and kNN with default hyperparameters."""
    return [
        ClassifierSpec(kind="nb", prior="uniform"),
        ClassifierSpec(kind="svm", kernel="linear"),
        ClassifierSpec(kind="svm", kernel="rbf"),
        ClassifierSpec(kind="knn"),
    ]


def unbalanced_classifiers() -> list[ClassifierSpec]:
    """The variants compared under class imbalance: prior/no prior, weight/no weight."""
    return [
        ClassifierSpec(kind="nb", prior="uniform"),
        ClassifierSpec(kind="nb", prior="empirical"),
        ClassifierSpec(kind="svm", kernel="linear", weighted=False),
        ClassifierSpec(kind="svm", kernel="linear", weighted=True),
        ClassifierSpec(kind="svm", kernel="rbf", weighted=False),
        ClassifierSpec(kind="svm", kernel="rbf", weighted=True),
        ClassifierSpec(kind="knn"),
    ]
