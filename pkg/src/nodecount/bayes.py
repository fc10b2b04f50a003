"""Naive Bayes with Gaussian or Poisson ETA likelihood and MAP decision.

Column 0 of every feature matrix is ETA; further columns (transmit power,
distance) are either independent Gaussian features (naive mode) or
conditioning variables that select a per-(class, category) ETA model.
In conditioning mode the categorical features add no class-dependent term:
their marginal is the same for every class and cancels in the argmax.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, softmax

from nodecount.errors import ClassAbsent, DimensionMismatch

VARIANCE_FLOOR = 1e-6
RATE_FLOOR = 1e-6
MIN_CELL_SIZE = 2


class Likelihood(enum.Enum):
    GAUSSIAN = "gaussian"
    POISSON = "poisson"


class Prior(enum.Enum):
    UNIFORM = "uniform"
    EMPIRICAL = "empirical"


def discretize(eta) -> np.ndarray:
    """Round ETA to whole seconds (half up) for the Poisson pmf."""
    return np.maximum(np.floor(np.asarray(eta, dtype=float) + 0.5), 0.0)


def gaussian_logpdf(x, mean, var):
    return -0.5 * np.log(2.0 * np.pi * var) - (x - mean) ** 2 / (2.0 * var)


def poisson_logpmf(count, rate):
    return count * np.log(rate) - rate - gammaln(count + 1.0)


def _cell_key(row) -> tuple:
    return tuple(round(float(v), 9) for v in row)


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    """Fitted parameters.

    ``mean``/``var`` have shape (K, n). Under POISSON, ``mean[:, 0]`` is the
    Poisson rate of the discretized ETA and ``var[:, 0]`` is unused.
    ``cells`` maps a category tuple to per-class ETA parameters
    ``(param0, param1)`` or ``None`` where the cell fell back to the class model.
    """

    classes: np.ndarray
    likelihood: Likelihood
    prior_kind: Prior
    prior: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    conditioning: bool = False
    cells: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.mean.shape[1]

    def to_dict(self) -> dict:
        return {
            "classes": [int(c) for c in self.classes],
            "likelihood": self.likelihood.value,
            "prior_kind": self.prior_kind.value,
            "prior": [float(p) for p in self.prior],
            "mean": self.mean.tolist(),
            "var": self.var.tolist(),
            "conditioning": self.conditioning,
            "cells": [
                {"key": list(key), "params": [None if p is None else list(p) for p in params]}
                for key, params in self.cells.items()
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "NaiveBayesModel":
        cells = {
            tuple(c["key"]): tuple(None if p is None else tuple(p) for p in c["params"])
            for c in raw.get("cells", [])
        }
        return cls(
            classes=np.asarray(raw["classes"], dtype=int),
            likelihood=Likelihood(raw["likelihood"]),
            prior_kind=Prior(raw["prior_kind"]),
            prior=np.asarray(raw["prior"], dtype=float),
            mean=np.asarray(raw["mean"], dtype=float),
            var=np.asarray(raw["var"], dtype=float),
            conditioning=bool(raw["conditioning"]),
            cells=cells,
        )


def _eta_params(eta, likelihood):
    if likelihood is Likelihood.POISSON:
        return max(float(discretize(eta).mean()), RATE_FLOOR), 0.0
    return float(eta.mean()), max(float(eta.var(ddof=1)), VARIANCE_FLOOR)


def fit(
    X,
    y,
    likelihood: Likelihood = Likelihood.GAUSSIAN,
    prior: Prior = Prior.UNIFORM,
    conditioning: bool = False,
    classes=None,
) -> NaiveBayesModel:
    """Estimate per-class likelihood parameters and the class prior.

    ``classes`` lists the labels the model must cover; every one of them
    needs at least two training examples.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y)
    if len(X) != len(y):
        raise DimensionMismatch(f"{len(X)} rows but {len(y)} labels")
    likelihood = Likelihood(likelihood)
    prior = Prior(prior)
    classes = np.unique(y) if classes is None else np.asarray(sorted(classes))
    if len(classes) < 2:
        raise ClassAbsent("naive Bayes needs at least two classes")
    counts = np.array([np.sum(y == c) for c in classes])
    for c, k in zip(classes, counts):
        if k < MIN_CELL_SIZE:
            raise ClassAbsent(f"class {c} has {k} training examples, need {MIN_CELL_SIZE}")

    K, n = len(classes), X.shape[1]
    mean = np.empty((K, n))
    var = np.empty((K, n))
    for ki, c in enumerate(classes):
        Xc = X[y == c]
        mean[ki], var[ki] = Xc.mean(axis=0), np.maximum(Xc.var(axis=0, ddof=1), VARIANCE_FLOOR)
        mean[ki, 0], var[ki, 0] = _eta_params(Xc[:, 0], likelihood)

    if prior is Prior.EMPIRICAL:
        pri = counts / counts.sum()
    else:
        pri = np.full(K, 1.0 / K)

    cells = {}
    conditioning = bool(conditioning) and n > 1
    if conditioning:
        keys = [_cell_key(r) for r in X[:, 1:]]
        groups: dict[tuple, list[int]] = {}
        for i, key in enumerate(keys):
            groups.setdefault(key, []).append(i)
        for key, rows in groups.items():
            rows = np.asarray(rows)
            params = []
            for c in classes:
                eta = X[rows[y[rows] == c], 0]
                params.append(_eta_params(eta, likelihood) if len(eta) >= MIN_CELL_SIZE else None)
            cells[key] = tuple(params)

    return NaiveBayesModel(classes, likelihood, prior, pri, mean, var, conditioning, cells)


def _eta_loglik(model: NaiveBayesModel, eta, p0, p1):
    if model.likelihood is Likelihood.POISSON:
        return poisson_logpmf(discretize(eta)[:, None], p0)
    return gaussian_logpdf(eta[:, None], p0, p1)


def log_likelihood(model: NaiveBayesModel, X) -> np.ndarray:
    """log p(x | class) for every row and class, shape (M, K)."""
    X, _ = _as_batch(model, X)
    M = len(X)
    p0 = np.broadcast_to(model.mean[:, 0], (M, len(model.classes))).copy()
    p1 = np.broadcast_to(model.var[:, 0], (M, len(model.classes))).copy()
    if model.conditioning:
        for i, row in enumerate(X[:, 1:]):
            params = model.cells.get(_cell_key(row))
            if params is None:
                continue
            for ki, cell in enumerate(params):
                if cell is not None:
                    p0[i, ki], p1[i, ki] = cell
        return _eta_loglik(model, X[:, 0], p0, p1)
    ll = _eta_loglik(model, X[:, 0], p0, p1)
    if model.n_features > 1:
        rest = gaussian_logpdf(X[:, None, 1:], model.mean[None, :, 1:], model.var[None, :, 1:])
        ll = ll + rest.sum(axis=2)
    return ll


def _as_batch(model, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim <= 1
    X = X.reshape(1, -1) if single else X
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got shape {np.shape(X)}")
    return X, single


def posterior(model: NaiveBayesModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized log-posteriors and normalized probabilities.

    A single feature vector (1-D, or a scalar when n = 1) gives outputs of
    length K; a 2-D batch gives (M, K).
    """
    Xb, single = _as_batch(model, X)
    log_joint = log_likelihood(model, Xb) + np.log(model.prior)
    # softmax shifts by the row max, so huge negative log-joints normalize exactly
    probs = softmax(log_joint, axis=1)
    if single:
        return log_joint[0], probs[0]
    return log_joint, probs


def predict(model: NaiveBayesModel, X):
    """MAP class; an exact tie goes to the smaller node count."""
    Xb, single = _as_batch(model, X)
    log_joint, _ = posterior(model, Xb)
    # argmax returns the first maximum and classes are sorted ascending
    labels = model.classes[np.argmax(log_joint, axis=1)]
    return int(labels[0]) if single else labels


def ml_predict(model: NaiveBayesModel, X):
    """Maximum-likelihood decision, ignoring the prior."""
    Xb, single = _as_batch(model, X)
    labels = model.classes[np.argmax(log_likelihood(model, Xb), axis=1)]
    return int(labels[0]) if single else labels
