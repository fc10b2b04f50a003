"""Propagation of node-count mistakes into ETA prediction error.

Given the mean percentage ETA error observed when the ETA predictor is fed
``N_pred`` while ``N_real`` nodes were active, and the classifier's
conditional distribution P[N_pred | N_real], the expected error per true
class is the row-wise weighted average

    delta_n = sum_k P[N_pred = k | N_real = n] * err[n, k]
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from nodecount.errors import DataError, DimensionMismatch

log = logging.getLogger(__name__)

STOCHASTIC_TOL = 1e-6
# printed 4-decimal tables can miss 1 by a few units in the last place
ROUNDING_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class ErrorMatrix:
    """Percentage mean errors indexed (N_real, N_pred), optional per-cell sd."""

    err: np.ndarray
    sd: np.ndarray | None = None

    def __post_init__(self):
        err = np.asarray(self.err, dtype=float)
        if err.ndim != 2 or err.shape[0] != err.shape[1]:
            raise DimensionMismatch(f"error matrix must be square, got {err.shape}")
        if np.any(err < 0) or not np.all(np.isfinite(err)):
            raise DataError("error matrix entries must be finite and non-negative")
        object.__setattr__(self, "err", err)
        if self.sd is not None:
            sd = np.asarray(self.sd, dtype=float)
            if sd.shape != err.shape:
                raise DimensionMismatch("sd matrix shape differs from error matrix")
            if np.any(sd < 0):
                raise DataError("standard deviations must be non-negative")
            object.__setattr__(self, "sd", sd)


@dataclass(frozen=True, eq=False)
class PredictionDistribution:
    """Row-stochastic ``p[n, k] = P[N_pred = k | N_real = n]``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise DimensionMismatch(f"distribution must be square, got {p.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise DataError("probabilities must lie in [0, 1]")
        sums = p.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1) > STOCHASTIC_TOL)
        if bad.size:
            raise DataError(f"row {bad[0] + 1} sums to {sums[bad[0]]:.6g}, not 1")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_rounded(cls, rows, tol: float = ROUNDING_TOL) -> "PredictionDistribution":
        """Renormalize rows that miss 1 only by print rounding (|sum - 1| <= tol)."""
        p = np.asarray(rows, dtype=float)
        sums = p.sum(axis=1, keepdims=True)
        off = np.abs(sums[:, 0] - 1)
        if np.any(off > tol):
            row = int(np.argmax(off))
            raise DataError(f"row {row + 1} sums to {sums[row, 0]:.6g}; too far from 1 to renormalize")
        for row in np.flatnonzero(off > STOCHASTIC_TOL):
            log.info("renormalizing distribution row %d (sum %.6g)", row + 1, sums[row, 0])
        return cls(p / sums)


def empirical_distribution(cm) -> PredictionDistribution:
    """Row-normalize a confusion matrix (true class by row)."""
    counts = np.asarray(getattr(cm, "counts", cm), dtype=float)
    rows = counts.sum(axis=1)
    if np.any(rows == 0):
        raise DataError(f"true class row {int(np.argmax(rows == 0)) + 1} is empty")
    return PredictionDistribution(counts / rows[:, None])


def weighted_error(err: ErrorMatrix, dist: PredictionDistribution) -> np.ndarray:
    if err.err.shape != dist.p.shape:
        raise DimensionMismatch(f"error matrix {err.err.shape} vs distribution {dist.p.shape}")
    return np.sum(dist.p * err.err, axis=1)


def weighted_error_sd(err: ErrorMatrix, dist: PredictionDistribution) -> np.ndarray | None:
    """First-order spread of delta, treating the cell errors as independent.

    Derived quantity: sqrt(sum_k p[n, k]^2 sd[n, k]^2).
    """
    if err.sd is None:
        return None
    if err.sd.shape != dist.p.shape:
        raise DimensionMismatch("sd matrix shape differs from distribution")
    return np.sqrt(np.sum(dist.p**2 * err.sd**2, axis=1))


# --------------------------------------------------------------------------
# CSV grids


def read_grid(path, size: int = 4) -> np.ndarray:
    """A ``size`` x ``size`` numeric grid below one header row."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    if len(body) != size or any(len(r) != size for r in body):
        raise DataError(f"{path}: expected a header row and a {size}x{size} grid")
    try:
        return np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_grid(grid, path, prefix: str = "n_pred_") -> None:
    grid = np.asarray(grid)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{prefix}{k + 1}" for k in range(grid.shape[1])])
        for row in grid:
            w.writerow([repr(float(v)) for v in row])


def read_error_matrix(path, sd_path=None) -> ErrorMatrix:
    return ErrorMatrix(read_grid(path), None if sd_path is None else read_grid(sd_path))


def read_distribution(path, renormalize: bool = True) -> PredictionDistribution:
    grid = read_grid(path)
    return PredictionDistribution.from_rounded(grid) if renormalize else PredictionDistribution(grid)


def _reference_path(name: str):
    return resources.files("nodecount").joinpath("reference", name)


def reference_error_matrix() -> ErrorMatrix:
    """Bundled mean (and sd) percentage ETA errors per (N_real, N_pred)."""
    with resources.as_file(_reference_path("eta_error_mean.csv")) as mean, \
            resources.as_file(_reference_path("eta_error_sd.csv")) as sd:
        return read_error_matrix(mean, sd)


def reference_distribution() -> PredictionDistribution:
    """Bundled P[N_pred | N_real] of the radial SVM on ETA alone, full dataset."""
    with resources.as_file(_reference_path("pred_distribution_svmr_eta.csv")) as p:
        return read_distribution(p)


def reference_paths() -> dict[str, Path]:
    return {
        name: Path(str(_reference_path(f)))
        for name, f in (
            ("errors", "eta_error_mean.csv"),
            ("errors_sd", "eta_error_sd.csv"),
            ("dist", "pred_distribution_svmr_eta.csv"),
        )
    }
