#!/usr/bin/env python3
"""Write demo CSVs (training, in-distribution, shifted) for trying the CLI."""
import argparse
import sys
from pathlib import Path

import numpy as np

from rulewatch.synth import GaussianMixtureSource


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("outdir", nargs="?", default="demo-data")
    ap.add_argument("--rows", type=int, default=60_000)
    ap.add_argument("--op-rows", type=int, default=10_000)
    ap.add_argument("--shift", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    src = GaussianMixtureSource(n_features=6, informative=(0, 1, 2, 3), class_sep=1.5)
    shifted = src.shifted({1: args.shift, 2: args.shift, 3: args.shift})

    src.sample(args.rows, rng).to_csv(outdir / "train.csv")
    src.sample(args.op_rows, rng).to_csv(outdir / "op_in.csv")
    shifted.sample(args.op_rows, rng).to_csv(outdir / "op_shifted.csv")
    print(f"wrote train.csv ({args.rows} rows), op_in.csv, op_shifted.csv to {outdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
