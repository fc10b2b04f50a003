"""Grid runner: (classifier x feature subset x subsample) cells -> report files."""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from nodecount import plots
from nodecount.dataset import (
    CLASSES,
    Dataset,
    FeatureSubset,
    SubsampleSpec,
    load_csv,
    make_folds,
    project,
)
from nodecount.errors import ConfigError
from nodecount.evaluation import cross_validate
from nodecount.models import ClassifierSpec, standard_classifiers, unbalanced_classifiers
from nodecount.synth import GeneratorConfig, generate, read_config_file

log = logging.getLogger(__name__)

REPORT_NAME = "report.json"
NOTES = [
    "Paired significance tests between classifiers are not computed.",
    "pred_distribution is P[N_pred | N_real] from the confusion matrix pooled over folds.",
]
PRESETS = {"standard": standard_classifiers, "unbalanced": unbalanced_classifiers}


@dataclass(frozen=True)
class ExperimentConfig:
    csv: Path | None = None
    generator: GeneratorConfig | None = None
    subsets: tuple[FeatureSubset, ...] = tuple(FeatureSubset)
    classifiers: tuple[ClassifierSpec, ...] = field(default_factory=lambda: tuple(standard_classifiers()))
    subsamples: tuple[SubsampleSpec | None, ...] = (None,)
    folds: int = 5
    seed: int = 42
    out: Path = Path("results")
    svg: bool = False

    def __post_init__(self):
        if not self.classifiers:
            raise ConfigError("at least one classifier is required")
        if not self.subsets:
            raise ConfigError("at least one feature subset is required")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")

    def load_data(self) -> Dataset:
        if self.csv is not None:
            return load_csv(self.csv)
        gen = self.generator or GeneratorConfig(seed=self.seed)
        return generate(gen)

    def to_dict(self) -> dict:
        return {
            "data": {"csv": str(self.csv)} if self.csv is not None
            else {"generator": (self.generator or GeneratorConfig(seed=self.seed)).to_dict()},
            "subsets": [s.name for s in self.subsets],
            "classifiers": [c.to_dict() for c in self.classifiers],
            "subsamples": [None if s is None else s.name for s in self.subsamples],
            "folds": self.folds,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: Mapping, base_dir: Path | None = None, **overrides) -> "ExperimentConfig":
        """Parse a config mapping; keyword overrides win over file values when not None."""
        known = {"data", "subsets", "classifiers", "subsamples", "folds", "seed", "out", "svg"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        merged = dict(raw)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        try:
            seed = int(merged.get("seed", 42))
            folds = int(merged.get("folds", 5))
        except (TypeError, ValueError):
            raise ConfigError("seed and folds must be integers") from None

        data = merged.get("data") or {}
        if not isinstance(data, Mapping):
            raise ConfigError("data must be a mapping")
        csv_path = data.get("csv")
        generator = None
        if csv_path is not None:
            csv_path = Path(csv_path)
            if base_dir is not None and not csv_path.is_absolute():
                csv_path = base_dir / csv_path
        else:
            gen_raw = dict(data.get("generator") or {})
            gen_raw.setdefault("seed", seed)
            generator = GeneratorConfig.from_dict(gen_raw)

        subsets = tuple(FeatureSubset.parse(s) for s in merged.get("subsets", [s.name for s in FeatureSubset]))
        classifiers = merged.get("classifiers", "standard")
        if isinstance(classifiers, str):
            if classifiers not in PRESETS:
                raise ConfigError(f"unknown classifier preset {classifiers!r}; choose from {sorted(PRESETS)}")
            specs = tuple(PRESETS[classifiers]())
        else:
            specs = tuple(ClassifierSpec.from_dict(c) for c in classifiers)

        subsamples = []
        for s in merged.get("subsamples", [None]):
            if s is None or s == "full":
                subsamples.append(None)
            elif isinstance(s, str):
                subsamples.append(SubsampleSpec.parse(s, seed))
            elif isinstance(s, Mapping):
                subsamples.append(SubsampleSpec(s, seed))
            else:
                raise ConfigError(f"cannot parse subsample {s!r}")

        return cls(
            csv=csv_path,
            generator=generator,
            subsets=subsets,
            classifiers=specs,
            subsamples=tuple(subsamples),
            folds=folds,
            seed=seed,
            out=Path(merged.get("out", "results")),
            svg=bool(merged.get("svg", False)),
        )

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(read_config_file(path), base_dir=path.parent, **overrides)


def _slug(*parts: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", "_".join(parts).lower()).strip("_")


def run_cell(dataset: Dataset, plan, spec: ClassifierSpec, subset: FeatureSubset,
             subsample: SubsampleSpec | None) -> tuple[dict, list[tuple[float, float]]]:
    """Evaluate one grid cell; returns its report record and ROC points."""
    result = cross_validate(project(dataset, subset), plan, spec, subsample)
    roc = result.roc()
    f1_mean, f1_sd = result.f1_mean, result.f1_sd
    prec, rec = result.precision_mean, result.recall_mean
    cell = {
        "classifier": spec.label,
        "classifier_spec": spec.to_dict(),
        "features": subset.name,
        "subsample": "full" if subsample is None else subsample.name,
        "n_examples": len(result.dataset),
        "class_counts": {str(c): n for c, n in result.dataset.class_counts().items()},
        "per_class": [
            {"n": c, "f1_mean": float(f1_mean[i]), "f1_sd": float(f1_sd[i]),
             "precision": float(prec[i]), "recall": float(rec[i])}
            for i, c in enumerate(CLASSES)
        ],
        "macro_f1": result.macro_f1,
        "macro_f1_sd": result.macro_f1_sd,
        "confusion": result.confusion.tolist(),
        "roc": None,
        "auc": roc.auc,
        "fpr_at_tpr95": result.fpr_at_tpr(0.95),
        "pred_distribution": result.pred_distribution().p.tolist(),
        "folds": [
            {"fold": f.fold, "n_test": int(len(f.test_indices)), "macro_f1": f.macro_f1,
             "f1": [s.f1 for s in f.per_class], "confusion": f.confusion.tolist(),
             "scaling": f.scaling}
            for f in result.folds
        ],
        "warnings": result.warnings,
    }
    return cell, roc.points


def _run_cell_args(args):
    return run_cell(*args)


def run(config: ExperimentConfig, jobs: int = 1) -> dict:
    """Execute every cell and write ``report.json`` plus ROC CSVs under ``config.out``."""
    dataset = config.load_data()
    plan = make_folds(dataset, config.folds, config.seed)
    grid = [
        (subset, spec, sub)
        for sub in config.subsamples
        for subset in config.subsets
        for spec in config.classifiers
    ]
    tasks = [(dataset, plan, spec, subset, sub) for subset, spec, sub in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_run_cell_args, tasks))
    else:
        outputs = [_run_cell_args(t) for t in tasks]

    out = Path(config.out)
    roc_dir = out / "roc"
    roc_dir.mkdir(parents=True, exist_ok=True)
    cells = []
    curves: dict[tuple[str, str], list] = {}
    for (cell, points), (subset, spec, sub) in zip(outputs, grid):
        name = _slug(cell["classifier"], cell["features"], cell["subsample"])
        rel = f"roc/{name}.csv"
        plots.write_points_csv(points, out / rel)
        cell["roc"] = rel
        for w in cell["warnings"]:
            log.warning("%s / %s / %s: %s", cell["classifier"], cell["features"], cell["subsample"], w)
        cells.append(cell)
        curves.setdefault((cell["features"], cell["subsample"]), []).append((cell["classifier"], points))

    if config.svg:
        for (features, subsample), series in curves.items():
            plots.write_roc_svg(series, out / f"roc_{_slug(features, subsample)}.svg",
                                title=f"ROC, {features}, {subsample}")

    report = {"config_echo": config.to_dict(), "cells": cells, "notes": NOTES}
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    (out / REPORT_NAME).write_text(text, encoding="utf-8")
    return report


def load_report_schema() -> dict:
    from importlib import resources

    return json.loads(resources.files("nodecount").joinpath("report_schema.json").read_text("utf-8"))


def summary_table(report: dict) -> str:
    """Plain-text per-cell F1 table."""
    lines = [f"{'features':<20} {'subsample':<14} {'classifier':<20} " + " ".join(f"N={c:<5}" for c in CLASSES)
             + "  macro   fpr@.95"]
    for cell in report["cells"]:
        f1 = " ".join(f"{p['f1_mean']:.3f}  " for p in cell["per_class"])
        lines.append(f"{cell['features']:<20} {cell['subsample']:<14} {cell['classifier']:<20} {f1}"
                     f"{cell['macro_f1']:.3f}   {cell['fpr_at_tpr95']:.3f}")
    return "\n".join(lines)

