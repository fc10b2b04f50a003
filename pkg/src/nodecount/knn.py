"""Exact k-nearest-neighbour classification by linear scan."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nodecount.errors import ConfigError, DataError, DimensionMismatch, InvalidK

DEFAULT_K = 5
_CHUNK = 256


@dataclass(frozen=True, eq=False)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    classes: tuple[int, ...]
    metric: str = "euclidean"

    def to_dict(self) -> dict:
        return {"k": self.k, "metric": self.metric, "classes": list(self.classes), "n_stored": len(self.y)}


def fit(X, y, k: int = DEFAULT_K, classes=None, metric: str = "euclidean") -> KnnModel:
    """Store the training rows verbatim."""
    X = np.array(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.array(y, dtype=int)
    if len(X) == 0:
        raise DataError("kNN needs at least one training example")
    if len(X) != len(y):
        raise DimensionMismatch(f"{len(X)} rows but {len(y)} labels")
    if metric != "euclidean":
        raise ConfigError(f"unsupported metric {metric!r}")
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= len(X)):
        raise InvalidK(f"k must be in 1..{len(X)}, got {k}")
    classes = tuple(int(c) for c in (np.unique(y) if classes is None else sorted(classes)))
    X.flags.writeable = False
    y.flags.writeable = False
    return KnnModel(X, y, int(k), classes, metric)


def _neighbours(d2: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest entries; equal distances keep training order."""
    kth = np.partition(d2, k - 1)[k - 1]
    closer = np.flatnonzero(d2 < kth)
    tied = np.flatnonzero(d2 == kth)[: k - len(closer)]
    return np.concatenate([closer, tied])


def predict(model: KnnModel, X):
    """Majority label among the k nearest stored rows.

    Label ties go to the smaller mean neighbour distance, then the smaller
    node count. Returns ``(labels, fractions)`` where ``fractions[:, c]`` is
    the share of the k neighbours carrying class ``c``.
    """
    Xa = np.asarray(X, dtype=float)
    single = Xa.ndim <= 1
    Xa = Xa.reshape(1, -1) if single else Xa
    n = model.X.shape[1]
    if Xa.ndim != 2 or Xa.shape[1] != n:
        raise DimensionMismatch(f"expected {n} features, got shape {np.shape(X)}")

    K = len(model.classes)
    index = {c: i for i, c in enumerate(model.classes)}
    label_idx = np.array([index[int(c)] for c in model.y])
    labels = np.empty(len(Xa), dtype=int)
    fractions = np.zeros((len(Xa), K))
    for start in range(0, len(Xa), _CHUNK):
        block = Xa[start:start + _CHUNK]
        d2_block = ((block[:, None, :] - model.X[None, :, :]) ** 2).sum(axis=2)
        for r, d2 in enumerate(d2_block):
            nb = _neighbours(d2, model.k)
            cls = label_idx[nb]
            votes = np.bincount(cls, minlength=K)
            dist_sum = np.bincount(cls, weights=np.sqrt(d2[nb]), minlength=K)
            top = np.flatnonzero(votes == votes.max())
            best = min(top, key=lambda c: (dist_sum[c] / votes[c], c))
            labels[start + r] = model.classes[best]
            fractions[start + r] = votes / model.k
    if single:
        return int(labels[0]), fractions[0]
    return labels, fractions
