"""Command line: ``run <config>``, ``eval <dataset> --mask 3,4``, ``inspect <results-file>``.

``ISPSO_OUT`` and ``ISPSO_JOBS`` set the output directory and worker limit;
command-line flags win over them, and they win over the config file.
Exit codes: 0 success, 1 partial failure, 2 config error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import DatasetError, load_dataset, normalize, stratified_kfold
from .experiment import ConfigError, execute, load_results, parse_spec, render_table
from .fitness import FitnessEvaluator, KnnParams
from .metrics import confusion, precision_recall_f

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _env_int(name: str) -> int | None:
    raw = os.environ.get(name)
    if raw in (None, ""):
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(name, f"expected an integer, got {raw!r}") from None


def cmd_run(args) -> int:
    spec = parse_spec(args.config)
    out = args.out or os.environ.get("ISPSO_OUT") or None
    spec = spec.with_overrides(seed=args.seed, runs=args.runs, out=out)
    jobs = args.jobs if args.jobs is not None else (_env_int("ISPSO_JOBS") or 1)
    if jobs < 1:
        raise ConfigError("jobs", "must be >= 1")
    log = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    table = execute(spec, jobs=jobs, log=log)
    print(render_table(table, "text"), end="")
    print(f"results in {spec.out_dir}", file=sys.stderr)
    return table.exit_code


def parse_mask(text: str, n_features: int) -> np.ndarray:
    """1-based comma list ("3,4") or a bit string ("0011") to a 0/1 mask."""
    text = text.strip()
    mask = np.zeros(n_features, dtype=np.int8)
    if text and set(text) <= {"0", "1"} and len(text) == n_features and "," not in text:
        mask[:] = [int(c) for c in text]
    else:
        try:
            idx = [int(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise ConfigError("mask", f"expected 1-based indices like 3,4, got {text!r}") from None
        for j in idx:
            if not 1 <= j <= n_features:
                raise ConfigError("mask", f"index {j} outside 1..{n_features}")
            mask[j - 1] = 1
    if not mask.any():
        raise ConfigError("mask", "selects no features")
    return mask


def cmd_eval(args) -> int:
    d = load_dataset(args.dataset, args.label)
    mask = np.ones(d.n_features, dtype=np.int8) if args.mask is None else parse_mask(args.mask, d.n_features)
    data = d if args.raw else normalize(d)
    plan = stratified_kfold(data, args.folds, seed=args.seed)
    evaluate = FitnessEvaluator(data, plan, KnnParams(k=args.k))
    fit = evaluate(mask)
    preds = evaluate.predictions(mask)
    p, r, f = precision_recall_f(confusion(data.codes.tolist(), preds.tolist(), range(data.n_classes)))
    report = {
        "dataset": d.name,
        "selected": [int(j) + 1 for j in np.flatnonzero(mask)],
        "accuracy": fit.cv_accuracy,
        "precision": p,
        "recall": r,
        "f_measure": f,
        "folds": args.folds,
        "k": args.k,
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"{d.name}: {d.n_samples} samples, {d.n_features} features, {d.n_classes} classes")
        print(f"subset   {','.join(map(str, report['selected']))}")
        print(f"accuracy {100 * fit.cv_accuracy:.2f}%  P {100 * p:.2f}  R {100 * r:.2f}  F {100 * f:.2f}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    doc = load_results(args.results)
    if "runs" not in doc:
        # a single-run file
        keys = [k for k in sorted(doc) if k != "history"]
        for k in keys:
            print(f"{k:18s} {doc[k]}")
        if "history" in doc:
            print(f"{'iterations':18s} {len(doc['history']) - 1}")
        return EXIT_OK
    agg = doc["aggregate"]
    shape = doc.get("dataset_shape", {})
    print(f"{doc['dataset']} / {doc['variant']}  ({shape.get('samples')} x {shape.get('features')})")
    print(
        f"mean accuracy {100 * agg['mean_accuracy']:.2f} +- {100 * agg['sd_accuracy']:.2f}"
        f"  size {agg['mean_subset_size']:.2f}  budget {agg['budget']}"
    )
    print(f"best run seed {agg['best_seed']}: {','.join(map(str, agg['best_selected']))}")
    print()
    print(f"{'seed':>6}  {'acc%':>7}  {'size':>4}  {'F%':>7}  subset")
    for run in doc["runs"]:
        print(
            f"{run['seed']:>6}  {100 * run['accuracy']:7.2f}  {run['n_selected']:>4}"
            f"  {100 * run['f_measure']:7.2f}  {','.join(map(str, run['selected']))}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ispso", description="Chaos-seeded binary PSO feature selection.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a full experiment from a YAML config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="base seed (run i uses seed + i)")
    run.add_argument("--runs", type=int, help="runs per (dataset, variant)")
    run.add_argument("--jobs", type=int, help="concurrent (dataset, variant) pairs")
    run.add_argument("--out", help="output directory")
    run.add_argument("-q", "--quiet", action="store_true")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="cross-validate one feature subset")
    ev.add_argument("dataset", help="CSV/TSV file")
    ev.add_argument("--mask", help="1-based indices, e.g. 3,4 (default: all features)")
    ev.add_argument("--label", default="-1", help="label column name or index (default: last)")
    ev.add_argument("--folds", type=int, default=10)
    ev.add_argument("--seed", type=int, default=0, help="fold-plan seed")
    ev.add_argument("--k", type=int, default=1)
    ev.add_argument("--raw", action="store_true", help="skip [-1, 1] normalization")
    ev.add_argument("--json", action="store_true")
    ev.set_defaults(func=cmd_eval)

    ins = sub.add_parser("inspect", help="pretty-print a results file")
    ins.add_argument("results")
    ins.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "label", None) is not None:
        args.label = int(args.label) if args.label.lstrip("-").isdigit() else args.label
    try:
        return args.func(args)
    except (ConfigError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
