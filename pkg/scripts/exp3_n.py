"""Experiment 3 (identity design, K=3 unknown) over a grid of sample sizes.

``--threshold norm`` keeps the BSLE default ``tau = 0.045 n`` on the norm
score; ``--threshold squared`` uses ``tau = sqrt(0.045 n)``, which applies the
same constant to the squared score. The BSLE setting also feeds ``lsa+bsle``.

Example::

    python3 scripts/exp3_n.py --n 480,560,640,720,800 --reps 100 --threshold squared
"""

import argparse
import math

from cpseg.sim import ExperimentConfig, format_table, run_benchmark


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="480,560,640,720,800")
    ap.add_argument("--detectors", default="bsle,lsa+bsle,lsa+perturbed,bssgl,sgl")
    ap.add_argument("--threshold", choices=("norm", "squared"), default="squared")
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rows = []
    for n in (int(v) for v in args.n.split(",")):
        overrides = {"bsle": {"tau": math.sqrt(0.045 * n)}} if args.threshold == "squared" else {}
        cfg = ExperimentConfig.preset(
            "exp3", n=n, reps=args.reps, seed=args.seed, detectors=tuple(args.detectors.split(",")), overrides=overrides
        )
        rows.extend(type(r)(**{**r.to_dict(), "cell": f"n={n}"}) for r in run_benchmark(cfg))
    print(format_table(rows))


if __name__ == "__main__":
    main()
