"""Experiment 1 (identity design, K=2 known) over a grid of jump sizes.

Example::

    python3 scripts/exp1_kappa.py --reps 100 --detectors bsle,sgl
"""

import argparse
import math

from cpseg.sim import ExperimentConfig, format_table, run_grid


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappa", default="0.2,0.4,0.8,1.6")
    ap.add_argument("--detectors", default="bsle,sgl,bssgl")
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--p", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument(
        "--reduced-bse",
        action="store_true",
        help="add BSE at n=120, p=40 with kappa scaled to keep Delta*kappa^2 fixed",
    )
    args = ap.parse_args(argv)
    kappas = [float(k) for k in args.kappa.split(",")]
    cfg = ExperimentConfig.preset(
        "exp1", n=args.n, p=args.p, reps=args.reps, seed=args.seed, detectors=tuple(args.detectors.split(","))
    )
    print(format_table(run_grid(cfg, "kappa", kappas)))
    if args.reduced_bse:
        small = ExperimentConfig.preset("exp1", n=120, p=40, reps=args.reps, seed=args.seed, detectors=("bse",))
        scale = math.sqrt((args.n / 3) / (small.n / 3))
        print()
        print(format_table(run_grid(small, "kappa", [k * scale for k in kappas])))


if __name__ == "__main__":
    main()
