"""Experiment records, CSV ingestion, feature subsets, folds and subsampling.

A :class:`Dataset` keeps one numpy column per measured parameter. The model
input matrix ``X`` (M x n) is a projection of those columns selected by a
:class:`FeatureSubset`; ETA is always column 0.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from nodecount.errors import (
    ClassAbsent,
    ConfigError,
    DataError,
    DomainError,
    InvalidLabel,
    MalformedRow,
    NonPositiveEta,
)

TX_POWERS = (0, 5, 10, 15, 20)
DISTANCES = (1, 5, 10)
CHANNELS = (1, 6, 11)
TIMES_OF_DAY = ("morning", "afternoon", "night")
CLASSES = (1, 2, 3, 4)

CSV_HEADER = ("eta_s", "tx_power_dbm", "distance_m", "channel", "time_of_day", "n_nodes")


@dataclass(frozen=True)
class LabeledExample:
    eta: float
    tx_power: int
    distance: int
    channel: int
    time_of_day: str
    label: int

    def __post_init__(self):
        if not self.eta > 0:
            raise NonPositiveEta(0, "eta_s", f"ETA must be positive, got {self.eta}")
        _check_domain("tx_power_dbm", self.tx_power, TX_POWERS)
        _check_domain("distance_m", self.distance, DISTANCES)
        _check_domain("channel", self.channel, CHANNELS)
        _check_domain("time_of_day", self.time_of_day, TIMES_OF_DAY)
        if self.label not in CLASSES:
            raise InvalidLabel(0, "n_nodes", f"label must be in 1..4, got {self.label}")


def _check_domain(name, value, domain, line=0):
    if value not in domain:
        raise DomainError(line, name, f"{value!r} not in {domain}")


class FeatureSubset(enum.Enum):
    """The four model-input selections; ETA is always included."""

    ETA_ONLY = ("eta",)
    ETA_POWER = ("eta", "tx_power")
    ETA_DISTANCE = ("eta", "distance")
    ETA_POWER_DISTANCE = ("eta", "tx_power", "distance")

    @property
    def columns(self) -> tuple[str, ...]:
        return self.value

    @property
    def dimension(self) -> int:
        return len(self.value)

    @property
    def label(self) -> str:
        return "+".join({"eta": "eta", "tx_power": "ptx", "distance": "d"}[c] for c in self.value)

    @classmethod
    def parse(cls, text: str) -> "FeatureSubset":
        """Accept an enum name (``ETA_POWER``) or a short label (``eta+ptx``)."""
        key = text.strip()
        for member in cls:
            if key.upper() == member.name or key.lower() == member.label:
                return member
        raise ConfigError(f"unknown feature subset {text!r}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented collection of experiments.

    All arrays have length M and are made read-only on construction.
    """

    eta: np.ndarray
    tx_power: np.ndarray
    distance: np.ndarray
    channel: np.ndarray
    time_of_day: np.ndarray
    labels: np.ndarray
    subset: FeatureSubset = FeatureSubset.ETA_POWER_DISTANCE

    def __post_init__(self):
        cols = {
            "eta": np.asarray(self.eta, dtype=float),
            "tx_power": np.asarray(self.tx_power, dtype=int),
            "distance": np.asarray(self.distance, dtype=int),
            "channel": np.asarray(self.channel, dtype=int),
            "time_of_day": np.asarray(self.time_of_day, dtype=object),
            "labels": np.asarray(self.labels, dtype=int),
        }
        m = len(cols["eta"])
        if m == 0:
            raise DataError("dataset must contain at least one example")
        for name, arr in cols.items():
            if arr.shape != (m,):
                raise DataError(f"column {name} has shape {arr.shape}, expected ({m},)")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not np.all(cols["eta"] > 0):
            raise DataError("every ETA must be positive")
        for name, domain in (
            ("tx_power", TX_POWERS),
            ("distance", DISTANCES),
            ("channel", CHANNELS),
            ("time_of_day", TIMES_OF_DAY),
            ("labels", CLASSES),
        ):
            bad = ~np.isin(cols[name], np.array(domain, dtype=cols[name].dtype))
            if bad.any():
                raise DataError(f"column {name} has out-of-domain value {cols[name][bad][0]!r}")

    @classmethod
    def from_examples(
        cls,
        examples: Iterable[LabeledExample],
        subset: FeatureSubset = FeatureSubset.ETA_POWER_DISTANCE,
    ) -> "Dataset":
        rows = list(examples)
        if not rows:
            raise DataError("dataset must contain at least one example")
        return cls(
            eta=[e.eta for e in rows],
            tx_power=[e.tx_power for e in rows],
            distance=[e.distance for e in rows],
            channel=[e.channel for e in rows],
            time_of_day=[e.time_of_day for e in rows],
            labels=[e.label for e in rows],
            subset=subset,
        )

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def examples(self) -> list[LabeledExample]:
        return [
            LabeledExample(float(e), int(p), int(d), int(c), str(t), int(n))
            for e, p, d, c, t, n in zip(
                self.eta, self.tx_power, self.distance, self.channel, self.time_of_day, self.labels
            )
        ]

    @property
    def X(self) -> np.ndarray:
        """Feature matrix (M x n) for the active subset."""
        return np.column_stack([np.asarray(getattr(self, c), dtype=float) for c in self.subset.columns])

    @property
    def y(self) -> np.ndarray:
        return self.labels

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            eta=self.eta[idx],
            tx_power=self.tx_power[idx],
            distance=self.distance[idx],
            channel=self.channel[idx],
            time_of_day=self.time_of_day[idx],
            labels=self.labels[idx],
            subset=self.subset,
        )

    def class_counts(self) -> dict[int, int]:
        return {c: int(np.sum(self.labels == c)) for c in CLASSES}


def project(dataset: Dataset, subset: FeatureSubset) -> Dataset:
    """Return a view of ``dataset`` exposing only ``subset``'s features."""
    if subset is dataset.subset:
        return dataset
    # arrays are read-only, so sharing them is safe
    return Dataset(
        eta=dataset.eta,
        tx_power=dataset.tx_power,
        distance=dataset.distance,
        channel=dataset.channel,
        time_of_day=dataset.time_of_day,
        labels=dataset.labels,
        subset=subset,
    )


# --------------------------------------------------------------------------
# CSV


def _parse_int(text, line, name):
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(line, name, f"not a number: {text!r}") from None
    if not value.is_integer():
        raise DomainError(line, name, f"expected an integer, got {text!r}")
    return int(value)


def load_csv(path: str | Path) -> Dataset:
    """Read the experiment CSV; errors carry the 1-based file line number."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            if tuple(h.strip() for h in header) != CSV_HEADER:
                raise MalformedRow(1, "header", f"expected {','.join(CSV_HEADER)}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                rows.append(_parse_row(row, lineno))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset.from_examples(rows)


def _parse_row(row: Sequence[str], line: int) -> LabeledExample:
    if len(row) != len(CSV_HEADER):
        raise MalformedRow(line, "row", f"expected {len(CSV_HEADER)} fields, got {len(row)}")
    eta_s, p_s, d_s, ch_s, tod_s, n_s = (cell.strip() for cell in row)
    try:
        eta = float(eta_s)
    except ValueError:
        raise MalformedRow(line, "eta_s", f"not a number: {eta_s!r}") from None
    if not (eta > 0 and math.isfinite(eta)):
        raise NonPositiveEta(line, "eta_s", f"ETA must be positive and finite, got {eta_s}")
    p = _parse_int(p_s, line, "tx_power_dbm")
    _check_domain("tx_power_dbm", p, TX_POWERS, line)
    d = _parse_int(d_s, line, "distance_m")
    _check_domain("distance_m", d, DISTANCES, line)
    ch = _parse_int(ch_s, line, "channel")
    _check_domain("channel", ch, CHANNELS, line)
    _check_domain("time_of_day", tod_s, TIMES_OF_DAY, line)
    n = _parse_int(n_s, line, "n_nodes")
    if n not in CLASSES:
        raise InvalidLabel(line, "n_nodes", f"label must be in 1..4, got {n_s}")
    return LabeledExample(eta, p, d, ch, tod_s, n)


def write_csv(dataset: Dataset, path: str | Path) -> None:
    """Write ``dataset`` in the ingestion schema; ETA uses shortest round-trip repr."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for e, p, d, c, t, n in zip(
            dataset.eta, dataset.tx_power, dataset.distance, dataset.channel,
            dataset.time_of_day, dataset.labels,
        ):
            writer.writerow((repr(float(e)), int(p), int(d), int(c), t, int(n)))


# --------------------------------------------------------------------------
# folds


@dataclass(frozen=True, eq=False)
class FoldPlan:
    fold_count: int
    assignment: np.ndarray
    seed: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=int)
        if a.size and (a.min() < 0 or a.max() >= self.fold_count):
            raise ValueError("fold index out of range")
        a.flags.writeable = False
        object.__setattr__(self, "assignment", a)

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train indices, test indices) with ``fold`` held out."""
        test = np.flatnonzero(self.assignment == fold)
        train = np.flatnonzero(self.assignment != fold)
        return train, test

    def __iter__(self):
        for f in range(self.fold_count):
            yield self.split(f)

    def restrict(self, indices) -> "FoldPlan":
        """Plan for the sub-dataset ``dataset.take(indices)``."""
        return FoldPlan(self.fold_count, self.assignment[np.asarray(indices, dtype=int)], self.seed)


def make_folds(dataset: Dataset, fold_count: int = 5, seed: int = 0) -> FoldPlan:
    """Stratified assignment: per-class fold counts differ by at most one."""
    if fold_count < 2:
        raise ConfigError("fold_count must be at least 2")
    labels = dataset.labels
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=int)
    offset = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < fold_count:
            raise ClassAbsent(f"class {c} has {len(idx)} examples, fewer than {fold_count} folds")
        perm = rng.permutation(idx)
        assignment[perm] = (offset + np.arange(len(perm))) % fold_count
        # rotating the start keeps total fold sizes balanced as well
        offset = (offset + len(perm)) % fold_count
    return FoldPlan(fold_count, assignment, seed)


# --------------------------------------------------------------------------
# class-proportional subsampling


@dataclass(frozen=True)
class SubsampleSpec:
    proportion_per_class: Mapping[int, float]
    seed: int = 0

    def __post_init__(self):
        props = {int(k): float(v) for k, v in self.proportion_per_class.items()}
        for k, v in props.items():
            if k not in CLASSES:
                raise ConfigError(f"subsample class {k} not in 1..4")
            if not 0 < v <= 1:
                raise ConfigError(f"subsample fraction for class {k} must be in (0, 1], got {v}")
        object.__setattr__(self, "proportion_per_class", props)

    def fraction(self, label: int) -> float:
        return self.proportion_per_class.get(label, 1.0)

    @property
    def name(self) -> str:
        return "-".join(_pct(self.fraction(c)) for c in CLASSES)

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SubsampleSpec":
        """Parse the ``10-20-50-100`` percentage notation."""
        parts = text.strip().split("-")
        if len(parts) != len(CLASSES):
            raise ConfigError(f"subsample {text!r} must list four percentages")
        try:
            fracs = [float(p) / 100.0 for p in parts]
        except ValueError:
            raise ConfigError(f"subsample {text!r} is not numeric") from None
        return cls(dict(zip(CLASSES, fracs)), seed)


def _pct(frac):
    pct = round(frac * 100, 6)
    return str(int(pct)) if float(pct).is_integer() else str(pct)


def keep_count(count: int, fraction: float) -> int:
    """Round-half-up of count * fraction."""
    # the inner round strips representation noise such as 5 * 0.3 = 1.4999...
    return int(math.floor(round(count * fraction, 9) + 0.5))


def _subsample_indices(labels: np.ndarray, spec: SubsampleSpec, salt: Sequence[int] = ()) -> np.ndarray:
    keep = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        rng = np.random.default_rng([spec.seed, *salt, int(c)])
        perm = rng.permutation(idx)
        # prefixes of a fixed permutation: a smaller fraction selects a subset
        keep.append(perm[: keep_count(len(idx), spec.fraction(int(c)))])
    return np.sort(np.concatenate(keep))


def subsample(dataset: Dataset, spec: SubsampleSpec) -> Dataset:
    """Keep round(count * fraction) examples of each class, without replacement."""
    return dataset.take(_subsample_indices(dataset.labels, spec))


def subsample_folds(dataset: Dataset, plan: FoldPlan, spec: SubsampleSpec) -> tuple[Dataset, FoldPlan]:
    """Subsample each fold separately so the fold structure is preserved."""
    keep = []
    for f in range(plan.fold_count):
        members = np.flatnonzero(plan.assignment == f)
        local = _subsample_indices(dataset.labels[members], spec, salt=(f,))
        keep.append(members[local])
    keep = np.sort(np.concatenate(keep))
    return dataset.take(keep), plan.restrict(keep)


# --------------------------------------------------------------------------
# standardization


@dataclass(frozen=True, eq=False)
class ScalingParams:
    mean: np.ndarray
    scale: np.ndarray
    zero_variance: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "scale": [float(v) for v in self.scale],
            "zero_variance": [bool(v) for v in self.zero_variance],
        }


def standardize(X_train, X_test=None) -> tuple[np.ndarray, np.ndarray | None, ScalingParams]:
    """Scale features to zero mean and unit sample standard deviation.

    Parameters are fitted on ``X_train`` only and then applied to ``X_test``.
    A zero-variance column is only centered and flagged in the returned
    parameters.

    Returns
    -------
    (Z_train, Z_test, params)
    """
    X_train = np.asarray(X_train, dtype=float)
    if X_train.ndim != 2 or len(X_train) == 0:
        raise DataError("standardize needs a non-empty 2-D training matrix")
    mean = X_train.mean(axis=0)
    if len(X_train) > 1:
        sd = X_train.std(axis=0, ddof=1)
    else:
        sd = np.zeros(X_train.shape[1])
    # relative threshold: a constant float column can carry rounding-level sd
    flat = ~(sd > 1e-12 * np.maximum(1.0, np.abs(mean)))
    scale = np.where(flat, 1.0, sd)
    params = ScalingParams(mean, scale, flat)
    Z_test = None if X_test is None else params.transform(X_test)
    return params.transform(X_train), Z_test, params
