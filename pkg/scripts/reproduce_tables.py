"""Run the desk-scale protocol over all five datasets and both variants.

    python scripts/reproduce_tables.py                # 20 runs, results/protocol
    python scripts/reproduce_tables.py --runs 3 --jobs 4
"""
import argparse
import sys
from pathlib import Path

from ispso.experiment import execute, parse_spec, render_table

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "protocol.yaml"))
    ap.add_argument("--runs", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    spec = parse_spec(args.config).with_overrides(seed=args.seed, runs=args.runs, out=args.out)
    table = execute(spec, jobs=args.jobs, log=lambda m: print(m, file=sys.stderr))
    print(render_table(table, "markdown"))
    return table.exit_code


if __name__ == "__main__":
    sys.exit(main())
