"""10-fold 1-NN accuracy with every feature kept, for each bundled dataset.

Prints normalized and raw-scale accuracy over a handful of fold-plan seeds,
so the spread due to fold assignment is visible.
"""
import argparse
from pathlib import Path

import numpy as np

from ispso import load_dataset, normalize, stratified_kfold
from ispso.fitness import cross_validated_accuracy

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("datasets", nargs="*", default=["iris", "wine", "wbc", "glass", "sonar"])
    args = ap.parse_args()

    print(f"{'dataset':8s} {'scale':6s} {'seed0':>7s} {'min':>7s} {'max':>7s}")
    for name in args.datasets:
        raw = load_dataset(DATA / f"{name}.csv", "class")
        ones = np.ones(raw.n_features, dtype=np.int8)
        for scale, d in (("[-1,1]", normalize(raw)), ("raw", raw)):
            accs = [100 * cross_validated_accuracy(d, ones, stratified_kfold(d, 10, s)) for s in range(args.seeds)]
            print(f"{name:8s} {scale:6s} {accs[0]:7.2f} {min(accs):7.2f} {max(accs):7.2f}")


if __name__ == "__main__":
    main()
