"""Per-iteration gbest accuracy and subset size as TSV, for external plotting."""
import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from ispso import AlgorithmConfig, load_dataset, run_once
from ispso.fitness import KnnParams
from ispso.orchestrator import ISPSO_GLOBAL, PLAIN_BPSO

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("dataset", nargs="?", default="wine")
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--tie-eps", type=float, default=0.01)
    args = ap.parse_args()

    d = load_dataset(DATA / f"{args.dataset}.csv", "class")
    curves = {}
    for variant in (ISPSO_GLOBAL, PLAIN_BPSO):
        cfg = AlgorithmConfig(variant=variant, knn=KnnParams(tie_eps=args.tie_eps))
        hist = [run_once(d, replace(cfg, seed=s)).history for s in range(args.runs)]
        curves[variant] = (
            np.mean([[h.cv_accuracy for h in run] for run in hist], axis=0),
            np.mean([[h.n_selected for h in run] for run in hist], axis=0),
        )
    print("iteration\t" + "\t".join(f"{v}_acc\t{v}_size" for v in curves))
    for t in range(len(next(iter(curves.values()))[0])):
        cells = [f"{acc[t]:.6f}\t{size[t]:.3f}" for acc, size in curves.values()]
        print(f"{t}\t" + "\t".join(cells))


if __name__ == "__main__":
    main()
