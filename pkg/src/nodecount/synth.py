"""Synthetic stand-in for the star-topology WiFi measurement campaign.

ETA is generated at flow level::

    eta = 8 * file_size / (base_rate(power, distance) / N ** contention_exponent)
          * exp(sigma(channel, time_of_day) * z),    z ~ N(0, 1)

The super-linear contention term compresses the log-ETA gap between
neighbouring node counts as N grows, so the 3-node class overlaps both of
its neighbours while the 1-node class stays well separated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from nodecount.dataset import CHANNELS, CLASSES, DISTANCES, TIMES_OF_DAY, TX_POWERS, Dataset
from nodecount.errors import ClassAbsent, ConfigError

# relative link-rate multipliers; a weaker signal or a longer path lowers the rate
_POWER_FACTOR = {0: 0.90, 5: 0.93, 10: 0.96, 15: 0.98, 20: 1.00}
_DISTANCE_FACTOR = {1: 1.00, 5: 0.95, 10: 0.90}
_PEAK_RATE_MBPS = 24.0

# channel 6 is the busiest in the building; afternoons carry the most foreign traffic
_CHANNEL_SIGMA = {1: 0.10, 6: 0.14, 11: 0.09}
_TOD_SIGMA_SCALE = {"morning": 1.0, "afternoon": 1.25, "night": 0.7}


def default_base_rate() -> dict[tuple[int, int], float]:
    return {
        (p, d): _PEAK_RATE_MBPS * _POWER_FACTOR[p] * _DISTANCE_FACTOR[d]
        for p in TX_POWERS
        for d in DISTANCES
    }


def default_noise() -> dict[tuple[int, str], float]:
    return {(c, t): _CHANNEL_SIGMA[c] * _TOD_SIGMA_SCALE[t] for c in CHANNELS for t in TIMES_OF_DAY}


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of the synthetic campaign.

    ``base_rate`` is in Mbit/s per (tx_power, distance) cell and ``noise``
    holds the log-normal sigma per (channel, time_of_day) cell.
    """

    file_size: float = 100.0
    base_rate: Mapping[tuple[int, int], float] = field(default_factory=default_base_rate)
    contention_exponent: float = 1.1
    noise: Mapping[tuple[int, str], float] = field(default_factory=default_noise)
    repetitions: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.file_size > 0:
            raise ConfigError("file_size must be positive")
        for cell in ((p, d) for p in TX_POWERS for d in DISTANCES):
            rate = self.base_rate.get(cell)
            if rate is None or not rate > 0:
                raise ConfigError(f"base_rate for (power, distance) {cell} must be positive")
        if not self.contention_exponent >= 1:
            raise ConfigError("contention_exponent must be >= 1")
        for cell in ((c, t) for c in CHANNELS for t in TIMES_OF_DAY):
            sigma = self.noise.get(cell)
            if sigma is None or not sigma >= 0:
                raise ConfigError(f"noise sigma for (channel, time_of_day) {cell} must be >= 0")
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ConfigError("repetitions must be a positive integer")

    def contention(self, n):
        return np.asarray(n, dtype=float) ** self.contention_exponent

    def to_dict(self) -> dict:
        return {
            "file_size": self.file_size,
            "base_rate": {str(p): {str(d): self.base_rate[(p, d)] for d in DISTANCES} for p in TX_POWERS},
            "contention_exponent": self.contention_exponent,
            "noise": {str(c): {t: self.noise[(c, t)] for t in TIMES_OF_DAY} for c in CHANNELS},
            "repetitions": self.repetitions,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "GeneratorConfig":
        """Build a config from parsed JSON/TOML.

        Besides the nested ``base_rate``/``noise`` tables, a scalar ``sigma``
        sets every noise cell at once.
        """
        known = {"file_size", "base_rate", "contention_exponent", "noise", "sigma", "repetitions", "seed"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown generator keys: {sorted(unknown)}")
        kwargs = {}
        try:
            for key in ("file_size", "contention_exponent"):
                if key in raw:
                    kwargs[key] = float(raw[key])
            for key in ("repetitions", "seed"):
                if key in raw:
                    kwargs[key] = int(raw[key])
            rates = default_base_rate()
            for p, row in raw.get("base_rate", {}).items():
                for d, v in row.items():
                    rates[(int(p), int(d))] = float(v)
            kwargs["base_rate"] = rates
            noise = default_noise()
            if "sigma" in raw:
                noise = {cell: float(raw["sigma"]) for cell in noise}
            for c, row in raw.get("noise", {}).items():
                for t, v in row.items():
                    noise[(int(c), str(t))] = float(v)
            kwargs["noise"] = noise
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"malformed generator config: {exc}") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "GeneratorConfig":
        return cls.from_dict(read_config_file(path))


def read_config_file(path: str | Path) -> dict:
    """Load a JSON or TOML mapping, chosen by file suffix."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            with path.open("rb") as fh:
                return tomllib.load(fh)
        with path.open(encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    return raw


def generate(config: GeneratorConfig | None = None) -> Dataset:
    """One example per (time_of_day, channel, power, distance, N, repetition)."""
    config = config or GeneratorConfig()
    reps = int(config.repetitions)
    grid = np.array(
        [
            (ti, c, p, d, n)
            for ti, _ in enumerate(TIMES_OF_DAY)
            for c in CHANNELS
            for p in TX_POWERS
            for d in DISTANCES
            for n in CLASSES
        ],
        dtype=int,
    )
    grid = np.repeat(grid, reps, axis=0)
    tod_idx, channel, power, distance, n = grid.T
    tod = np.array(TIMES_OF_DAY, dtype=object)[tod_idx]

    rate = np.array([config.base_rate[(pp, dd)] for pp, dd in zip(power, distance)])
    sigma = np.array([config.noise[(cc, tt)] for cc, tt in zip(channel, tod)])
    z = np.random.default_rng(config.seed).standard_normal(len(grid))
    megabits = 8.0 * config.file_size
    eta = megabits * config.contention(n) / rate * np.exp(sigma * z)
    return Dataset(eta=eta, tx_power=power, distance=distance, channel=channel,
                   time_of_day=tod, labels=n)


# --------------------------------------------------------------------------
# separability diagnostics


@dataclass(frozen=True)
class CalibrationReport:
    overlap: dict[tuple[int, int], float]
    per_cell: dict[tuple[int, int], dict[tuple[int, int], float]]

    def class_overlap(self) -> dict[int, float]:
        """Mean overlap of each class with the other three."""
        out = {}
        for c in CLASSES:
            vals = [v for (a, b), v in self.overlap.items() if c in (a, b)]
            out[c] = float(np.mean(vals))
        return out

    def to_dict(self) -> dict:
        return {
            "overlap": {f"{a}-{b}": v for (a, b), v in self.overlap.items()},
            "class_overlap": {str(c): v for c, v in self.class_overlap().items()},
            "per_cell": {
                f"{p}dBm-{d}m": {f"{a}-{b}": v for (a, b), v in cell.items()}
                for (p, d), cell in self.per_cell.items()
            },
        }


def bhattacharyya_overlap(a, b, bins: int = 64) -> float:
    """Histogram Bhattacharyya coefficient of two 1-D samples (0 = disjoint, 1 = equal)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        return 1.0
    edges = np.linspace(lo, hi, bins + 1)
    pa, _ = np.histogram(a, bins=edges)
    pb, _ = np.histogram(b, bins=edges)
    return float(np.sum(np.sqrt(pa / pa.sum() * pb / pb.sum())))


def calibration_report(dataset: Dataset, bins: int = 64) -> CalibrationReport:
    """Pairwise class overlap of the log-ETA marginals, globally and per (power, distance) cell."""
    counts = dataset.class_counts()
    missing = [c for c, k in counts.items() if k == 0]
    if missing:
        raise ClassAbsent(f"classes {missing} absent from dataset")
    log_eta = np.log(dataset.eta)
    labels = dataset.labels
    pairs = [(a, b) for i, a in enumerate(CLASSES) for b in CLASSES[i + 1:]]

    def pairwise(mask):
        return {
            (a, b): bhattacharyya_overlap(log_eta[mask & (labels == a)], log_eta[mask & (labels == b)], bins)
            for a, b in pairs
        }

    overlap = pairwise(np.ones(len(labels), dtype=bool))
    per_cell = {}
    for p in TX_POWERS:
        for d in DISTANCES:
            mask = (dataset.tx_power == p) & (dataset.distance == d)
            if all(np.any(mask & (labels == c)) for c in CLASSES):
                per_cell[(p, d)] = pairwise(mask)
    return CalibrationReport(overlap, per_cell)
