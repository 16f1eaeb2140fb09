"""Experiment 2 (Toeplitz 0.6 design, K=2 known) over a grid of jump sizes.

Jump sizes are given as multiples of sqrt(40).

Example::

    python3 scripts/exp2_kappa.py --reps 100
"""

import argparse
import math

from cpseg.sim import ExperimentConfig, format_table, run_grid


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", default="1.0,1.2,1.4,1.6", help="kappa / sqrt(40)")
    ap.add_argument("--detectors", default="bsle,sgl,bssgl")
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    kappas = [float(v) * math.sqrt(40) for v in args.scale.split(",")]
    cfg = ExperimentConfig.preset("exp2", reps=args.reps, seed=args.seed, detectors=tuple(args.detectors.split(",")))
    print(format_table(run_grid(cfg, "kappa", kappas)))


if __name__ == "__main__":
    main()
