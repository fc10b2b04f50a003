"""Command-line entry point.

Exit codes: 0 success (solver non-convergence only warns), 2 invalid
configuration or arguments, 3 data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from nodecount import eta
from nodecount.dataset import FeatureSubset, load_csv, write_csv
from nodecount.errors import ConfigError, NodeCountError
from nodecount.experiment import PRESETS, ExperimentConfig, run, summary_table
from nodecount.synth import GeneratorConfig, calibration_report, generate, read_config_file

EXIT_CONFIG = 2
EXIT_DATA = 3

log = logging.getLogger("nodecount")


def _generator_config(args) -> GeneratorConfig:
    raw = read_config_file(args.config) if args.config else {}
    if "generator" in raw:
        raw = raw["generator"]
    raw = dict(raw)
    if args.seed is not None:
        raw["seed"] = args.seed
    if getattr(args, "repetitions", None) is not None:
        raw["repetitions"] = args.repetitions
    if getattr(args, "sigma", None) is not None:
        raw["sigma"] = args.sigma
    return GeneratorConfig.from_dict(raw)


def cmd_generate(args) -> int:
    config = _generator_config(args)
    dataset = generate(config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(dataset, out)
    print(f"wrote {len(dataset)} rows to {out}")
    return 0


def cmd_evaluate(args) -> int:
    overrides = dict(seed=args.seed, folds=args.folds, out=args.out, svg=args.svg or None)
    if args.data:
        overrides["data"] = {"csv": str(Path(args.data).resolve())}
    if args.subsets:
        overrides["subsets"] = [s for s in args.subsets.split(",") if s]
    if args.classifiers:
        overrides["classifiers"] = args.classifiers
    if args.subsample:
        overrides["subsamples"] = args.subsample
    if args.config:
        config = ExperimentConfig.from_file(args.config, **overrides)
    else:
        config = ExperimentConfig.from_dict({}, **overrides)
    start = time.perf_counter()
    report = run(config, jobs=args.jobs)
    print(summary_table(report))
    n_warn = sum(len(c["warnings"]) for c in report["cells"])
    print(f"\n{len(report['cells'])} cells, {n_warn} warnings, "
          f"{time.perf_counter() - start:.1f}s; report in {Path(config.out) / 'report.json'}")
    return 0


def cmd_delta(args) -> int:
    ref = eta.reference_paths()
    errors_path = args.errors or ref["errors"]
    sd_path = args.errors_sd or (ref["errors_sd"] if args.errors is None else None)
    err = eta.read_error_matrix(errors_path, sd_path)
    dist = eta.read_distribution(args.dist or ref["dist"], renormalize=not args.strict)
    delta = eta.weighted_error(err, dist)
    spread = eta.weighted_error_sd(err, dist)
    if args.json:
        print(json.dumps({
            "delta": delta.tolist(),
            "delta_sd_derived": None if spread is None else spread.tolist(),
        }, indent=2))
        return 0
    print("delta = {" + ", ".join(f"{d:.1f}" for d in delta) + "}")
    for n, d in enumerate(delta, start=1):
        extra = "" if spread is None else f"  (+/- {spread[n - 1]:.2f}, derived)"
        print(f"  N_real={n}: {d:.4f}{extra}")
    return 0


def cmd_calibrate(args) -> int:
    if args.data:
        dataset = load_csv(args.data)
    else:
        dataset = generate(_generator_config(args))
    report = calibration_report(dataset, bins=args.bins)
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nodecount",
        description="Infer the number of receiving nodes in a WiFi cell from client-side observables.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic measurement campaign as CSV")
    g.add_argument("--config", help="generator config (JSON or TOML)")
    g.add_argument("--out", default="synthetic.csv", help="output CSV path")
    g.add_argument("--seed", type=int)
    g.add_argument("--repetitions", type=int, help="repetitions per configuration (default 10)")
    g.add_argument("--sigma", type=float, help="log-normal noise sigma applied to every channel/time cell")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="cross-validated classifier grid, JSON report and ROC data")
    e.add_argument("--config", help="experiment config (JSON or TOML)")
    e.add_argument("--data", help="measurement CSV (default: synthetic data)")
    e.add_argument("--out", help="output directory (default: results)")
    e.add_argument("--seed", type=int)
    e.add_argument("--folds", type=int)
    e.add_argument("--jobs", type=int, default=1, help="grid cells evaluated in parallel")
    e.add_argument("--subsets", help="comma list of " + ", ".join(s.name for s in FeatureSubset))
    e.add_argument("--classifiers", choices=sorted(PRESETS), help="classifier preset")
    e.add_argument("--subsample", action="append",
                   help="per-class percentages such as 10-20-50-100, or 'full'; repeatable")
    e.add_argument("--svg", action="store_true", help="also write SVG ROC charts")
    e.set_defaults(func=cmd_evaluate)

    d = sub.add_parser("delta", help="expected ETA error per true node count")
    d.add_argument("--errors", help="CSV grid of mean percentage errors (default: bundled reference)")
    d.add_argument("--errors-sd", help="CSV grid of per-cell standard deviations")
    d.add_argument("--dist", help="CSV grid of P[N_pred | N_real] (default: bundled reference)")
    d.add_argument("--strict", action="store_true", help="do not renormalize rounded distribution rows")
    d.add_argument("--json", action="store_true", help="machine-readable output")
    d.set_defaults(func=cmd_delta)

    c = sub.add_parser("calibrate", help="class-overlap report for generated or loaded data")
    c.add_argument("--data", help="measurement CSV (default: generate)")
    c.add_argument("--config", help="generator config (JSON or TOML)")
    c.add_argument("--seed", type=int)
    c.add_argument("--bins", type=int, default=64)
    c.add_argument("--out", help="also write the JSON report here")
    c.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NodeCountError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
