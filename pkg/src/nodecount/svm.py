"""Soft-margin SVM trained in the dual, with one-vs-one multiclass voting.

The dual problem

    max  sum(a) - 1/2 sum_ij y_i y_j a_i a_j k(x_i, x_j)
    s.t. 0 <= a_i <= C_i,  sum_i a_i y_i = 0

is solved by sequential pairwise coordinate ascent: each step picks the
maximal violating pair (second-order choice of the partner), solves the
two-variable subproblem in closed form along the feasible direction, and
updates the gradient incrementally.

Decision function: f(x) = sum_i a_i y_i k(x_i, x) + b.
"""

from __future__ import annotations

import enum
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

import numpy as np
from scipy.spatial.distance import cdist

from nodecount.errors import ClassAbsent, ConfigError, DimensionMismatch

log = logging.getLogger(__name__)

FULL_CACHE_LIMIT = 4096
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 100_000
_TAU = 1e-12


class KernelKind(enum.Enum):
    LINEAR = "linear"
    RBF = "rbf"


@dataclass(frozen=True)
class Kernel:
    kind: KernelKind = KernelKind.LINEAR
    gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is KernelKind.RBF and self.gamma is not None and not self.gamma > 0:
            raise ConfigError("RBF gamma must be positive")

    @classmethod
    def linear(cls) -> "Kernel":
        return cls(KernelKind.LINEAR)

    @classmethod
    def rbf(cls, gamma: float | None = None) -> "Kernel":
        return cls(KernelKind.RBF, gamma)

    def resolved(self, n_features: int) -> "Kernel":
        """Fill in the default RBF gamma of 1 / n_features."""
        if self.kind is KernelKind.RBF and self.gamma is None:
            return Kernel(KernelKind.RBF, 1.0 / n_features)
        return self

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.kind is KernelKind.LINEAR:
            return A @ B.T
        if self.gamma is None:
            raise ConfigError("RBF gamma unresolved; call Kernel.resolved first")
        # direct differences keep k(v, v) exactly 1
        return np.exp(-self.gamma * cdist(A, B, "sqeuclidean"))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "gamma": self.gamma}


class KernelCache:
    """Gram-matrix rows for the solver.

    Up to ``full_limit`` rows the whole matrix is computed once; beyond that
    rows are computed on demand and kept in an LRU of ``max_rows`` entries.
    """

    def __init__(self, X, kernel: Kernel, full_limit: int = FULL_CACHE_LIMIT, max_rows: int = 1024):
        self.X = np.asarray(X, dtype=float)
        self.kernel = kernel
        self.max_rows = max_rows
        m = len(self.X)
        if m <= full_limit:
            self._full = kernel(self.X, self.X)
            self.diag = np.diag(self._full).copy()
        else:
            self._full = None
            self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
            if kernel.kind is KernelKind.RBF:
                self.diag = np.ones(m)
            else:
                self.diag = np.einsum("ij,ij->i", self.X, self.X)

    @property
    def is_full(self) -> bool:
        return self._full is not None

    def row(self, i: int) -> np.ndarray:
        if self._full is not None:
            return self._full[i]
        row = self._rows.get(i)
        if row is None:
            row = self.kernel(self.X[i], self.X)[0]
            self._rows[i] = row
            if len(self._rows) > self.max_rows:
                self._rows.popitem(last=False)
        else:
            self._rows.move_to_end(i)
        return row


@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    """Support vectors with signed multipliers ``dual_coef = a_i * y_i``.

    ``class_pair`` is (label scored +1, label scored -1).
    """

    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    kernel: Kernel
    cost: float
    class_pair: tuple[int, int] = (1, -1)
    converged: bool = True
    iterations: int = 0
    objective: float = float("nan")
    support_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def weights(self) -> np.ndarray:
        """Primal normal vector w = sum_i a_i y_i x_i (linear kernel only)."""
        if self.kernel.kind is not KernelKind.LINEAR:
            raise ConfigError("explicit weights exist only for the linear kernel")
        return self.dual_coef @ self.support_vectors

    def to_dict(self) -> dict:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "kernel": self.kernel.to_dict(),
            "cost": self.cost,
            "class_pair": list(self.class_pair),
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "BinarySvmModel":
        k = raw["kernel"]
        return cls(
            support_vectors=np.asarray(raw["support_vectors"], dtype=float),
            dual_coef=np.asarray(raw["dual_coef"], dtype=float),
            bias=float(raw["bias"]),
            kernel=Kernel(KernelKind(k["kind"]), k["gamma"]),
            cost=float(raw["cost"]),
            class_pair=tuple(raw["class_pair"]),
            converged=bool(raw.get("converged", True)),
            iterations=int(raw.get("iterations", 0)),
        )


def dual_objective(alpha, y, K) -> float:
    """sum(a) - 1/2 (a*y)^T K (a*y)."""
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ K @ ay)


def solve_dual(
    X,
    y,
    kernel: Kernel = Kernel(),
    cost: float = 1.0,
    class_weights: Mapping[int, float] | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    class_pair: tuple[int, int] = (1, -1),
    cache: KernelCache | None = None,
) -> BinarySvmModel:
    """Train a binary soft-margin SVM.

    Parameters
    ----------
    X : (m, n) array
    y : (m,) array of +1 / -1
    class_weights : multiplier per label (+1 / -1); the box bound of
        example i is ``cost * class_weights[y_i]``.
    tol : stop when the maximal KKT violation gap falls below ``tol``.

    A run that exhausts ``max_iter`` returns the last iterate with
    ``converged=False`` instead of raising.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if len(X) != len(y):
        raise DimensionMismatch(f"{len(X)} rows but {len(y)} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("binary labels must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ClassAbsent("binary SVM needs examples of both classes")
    if not cost > 0:
        raise ConfigError("cost must be positive")
    if not tol > 0:
        raise ConfigError("tolerance must be positive")

    kernel = kernel.resolved(X.shape[1])
    cache = cache or KernelCache(X, kernel)
    weights = class_weights or {}
    C = cost * np.where(y > 0, weights.get(1, 1.0), weights.get(-1, 1.0))

    m = len(y)
    alpha = np.zeros(m)
    grad = -np.ones(m)  # gradient of 1/2 a^T Q a - sum(a), Q_ij = y_i y_j K_ij
    diag = cache.diag
    pos = y > 0
    converged = False
    it = 0
    while it < max_iter:
        at_upper = alpha >= C
        at_lower = alpha <= 0
        up = np.where(pos, ~at_upper, ~at_lower)
        low = np.where(pos, ~at_lower, ~at_upper)
        score = -y * grad
        up_scores = np.where(up, score, -np.inf)
        i = int(np.argmax(up_scores))
        g_max = up_scores[i]
        g_min = np.min(score, where=low, initial=np.inf)
        if g_max - g_min < tol:
            converged = True
            break

        Ki = cache.row(i)
        gap = g_max - score
        curv = diag[i] + diag - 2.0 * Ki
        curv = np.where(curv > 0, curv, _TAU)
        cand = low & (gap > 0)
        gain = np.where(cand, -(gap * gap) / curv, np.inf)
        j = int(np.argmin(gain))
        Kj = cache.row(j)

        # move a_i by +y_i t and a_j by -y_j t; sum(a * y) is unchanged
        t = gap[j] / curv[j]
        t = min(t, C[i] - alpha[i] if pos[i] else alpha[i])
        t = min(t, alpha[j] if pos[j] else C[j] - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        for idx in (i, j):
            if alpha[idx] < _TAU * C[idx]:
                alpha[idx] = 0.0
            elif alpha[idx] > C[idx] * (1 - _TAU):
                alpha[idx] = C[idx]
        grad += t * y * (Ki - Kj)
        it += 1

    if not converged:
        log.warning("SVM solver stopped after %d iterations without converging", it)

    score = -y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        bias = float(np.mean(score[free]))
    else:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        hi = np.max(score, where=up, initial=-np.inf)
        lo = np.min(score, where=low, initial=np.inf)
        if np.isfinite(hi) and np.isfinite(lo):
            bias = float((hi + lo) / 2)
        else:
            bias = float(hi if np.isfinite(hi) else lo)

    sv = np.flatnonzero(alpha > 0)
    objective = float(np.sum(alpha) - 0.5 * alpha @ (grad + 1.0))
    return BinarySvmModel(
        support_vectors=X[sv].copy(),
        dual_coef=(alpha * y)[sv],
        bias=bias,
        kernel=kernel,
        cost=float(cost),
        class_pair=tuple(class_pair),
        converged=converged,
        iterations=it,
        objective=objective,
        support_indices=sv,
    )


def decision_value(model: BinarySvmModel, X):
    """Pre-sign value sum_i a_i y_i k(x_i, x) + b.

    A single feature vector gives a float, a 2-D batch an array.
    """
    Xa = np.asarray(X, dtype=float)
    single = Xa.ndim <= 1
    Xa = Xa.reshape(1, -1) if single else Xa
    n = model.support_vectors.shape[1]
    if Xa.ndim != 2 or Xa.shape[1] != n:
        raise DimensionMismatch(f"expected {n} features, got shape {np.shape(X)}")
    if len(model.support_vectors) == 0:
        values = np.full(len(Xa), model.bias)
    else:
        values = model.kernel(Xa, model.support_vectors) @ model.dual_coef + model.bias
    return float(values[0]) if single else values


# --------------------------------------------------------------------------
# one-vs-one


@dataclass(frozen=True, eq=False)
class OvoSvmModel:
    classes: tuple[int, ...]
    binary_models: tuple[BinarySvmModel, ...]
    class_weights: dict[int, float]

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.binary_models)

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "class_weights": {str(k): v for k, v in self.class_weights.items()},
            "binary_models": [m.to_dict() for m in self.binary_models],
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "OvoSvmModel":
        return cls(
            classes=tuple(raw["classes"]),
            binary_models=tuple(BinarySvmModel.from_dict(m) for m in raw["binary_models"]),
            class_weights={int(k): float(v) for k, v in raw["class_weights"].items()},
        )


def balanced_weights(y, classes) -> dict[int, float]:
    """Inverse-frequency weights with weight_k * count_k equal for every class."""
    y = np.asarray(y)
    counts = {int(c): int(np.sum(y == c)) for c in classes}
    total = sum(counts.values())
    return {c: total / (len(counts) * k) for c, k in counts.items()}


def fit_ovo(
    X,
    y,
    kernel: Kernel = Kernel(),
    cost: float = 1.0,
    class_weights: Mapping[int, float] | str | None = None,
    classes=(1, 2, 3, 4),
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> OvoSvmModel:
    """One binary SVM per unordered class pair.

    ``class_weights`` is a per-class mapping, ``"balanced"`` for
    inverse-frequency weighting, or ``None`` for all ones.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y)
    classes = tuple(int(c) for c in sorted(classes))
    missing = [c for c in classes if not np.any(y == c)]
    if missing:
        raise ClassAbsent(f"classes {missing} absent from training data")
    if class_weights is None:
        weights = {c: 1.0 for c in classes}
    elif class_weights == "balanced":
        weights = balanced_weights(y, classes)
    else:
        weights = {c: float(class_weights.get(c, 1.0)) for c in classes}

    kernel = kernel.resolved(X.shape[1])
    models = []
    for a, b in combinations(classes, 2):
        mask = (y == a) | (y == b)
        yb = np.where(y[mask] == a, 1.0, -1.0)
        models.append(
            solve_dual(
                X[mask], yb, kernel, cost,
                class_weights={1: weights[a], -1: weights[b]},
                tol=tol, max_iter=max_iter, class_pair=(a, b),
            )
        )
    return OvoSvmModel(classes, tuple(models), weights)


def ovo_votes(model: OvoSvmModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Vote counts and summed signed margins per class, each (M, K)."""
    X = np.asarray(X, dtype=float)
    K = len(model.classes)
    index = {c: k for k, c in enumerate(model.classes)}
    votes = np.zeros((len(X), K), dtype=int)
    margins = np.zeros((len(X), K))
    for bm in model.binary_models:
        a, b = index[bm.class_pair[0]], index[bm.class_pair[1]]
        d = decision_value(bm, X)
        # zero decision goes to the first (smaller) class of the pair
        wins_a = d >= 0
        votes[:, a] += wins_a
        votes[:, b] += ~wins_a
        margins[:, a] += d
        margins[:, b] -= d
    return votes, margins


def predict_ovo(model: OvoSvmModel, X):
    """Majority vote over the pairwise classifiers.

    Ties on votes go to the larger margin sum, then the smaller node count.
    Returns ``(labels, votes, scores)``; the ROC score of a class is its vote
    count plus its margin sum squashed into (-0.5, 0.5), so the score order
    agrees with the decision order.
    """
    Xa = np.asarray(X, dtype=float)
    single = Xa.ndim <= 1
    Xa = Xa.reshape(1, -1) if single else Xa
    votes, margins = ovo_votes(model, Xa)
    labels = np.empty(len(Xa), dtype=int)
    for r in range(len(Xa)):
        best = max(range(len(model.classes)), key=lambda k: (votes[r, k], margins[r, k], -k))
        labels[r] = model.classes[best]
    scores = votes + margins / (2.0 * (1.0 + np.abs(margins)))
    if single:
        return int(labels[0]), votes[0], scores[0]
    return labels, votes, scores
