"""Local screening on perturbed true change points (Experiment 3 design).

Coarse estimates are the true points shifted uniformly within ``frac * Delta``;
prints the sup-norm error before and after refinement for each replicate and
a summary line.

Example::

    python3 scripts/lsa_refinement.py --n 960 --reps 50
"""

import argparse

import numpy as np

from cpseg.evaluation import supnorm_error
from cpseg.segmentation import default_config, lsa
from cpseg.sim import ExperimentConfig, generate_dataset, perturb, rep_seed


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=960)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--frac", type=float, default=0.125)
    ap.add_argument("--lam-scale", type=float, default=1.0, help="multiplier on the default 0.2 sqrt(log p)")
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args(argv)
    cfg = ExperimentConfig.preset("exp3", n=args.n)
    lam = args.lam_scale * default_config("lsa", cfg.n, cfg.p).lam
    radius = max(1, int(args.frac * cfg.spacing))
    before, after = [], []
    for rep in range(args.reps):
        data, _, truth = generate_dataset(cfg, rep_seed(args.seed, rep, 0))
        coarse = perturb(truth, np.random.default_rng(rep_seed(args.seed, rep, 2)), radius)
        refined = lsa(data, coarse, lam)
        before.append(supnorm_error(coarse, truth, cfg.n))
        after.append(supnorm_error(refined, truth, cfg.n))
        print(f"rep {rep:3d}  coarse {coarse.points}  refined {refined.points}  {before[-1]:.4f} -> {after[-1]:.4f}")
    frac = np.mean([a <= b for a, b in zip(after, before)])
    print(f"refined <= coarse in {frac:.0%}; mean sup error {np.mean(before):.4f} -> {np.mean(after):.4f}")


if __name__ == "__main__":
    main()
