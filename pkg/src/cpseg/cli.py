"""Command-line entry point: ``cpseg {simulate,detect,refine,evaluate,bench}``.

All indices on disk are 0-based. Randomness comes from ``--seed``; when it is
omitted a seed is drawn and printed to stderr.
"""

from __future__ import annotations

import argparse
import math
import secrets
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

from . import fileio
from .core import SegmentInterval
from .evaluation import evaluate
from .segmentation import ConfigError, bse, bsle, bssgl, default_config, generate_intervals, lsa, sgl_threshold_detect, top_k
from .sim import EXPERIMENTS, ExperimentConfig, format_table, generate_dataset, run_grid, run_reps, aggregate
from .solvers import EnumerationBudgetError, select_sgl_params, sgl_fit

DETECT_CHOICES = ("bse", "bsle", "bssgl", "sgl")


class UsageError(Exception):
    pass


def _float(v: str) -> float:
    return math.inf if v.lower() in ("inf", "infinity") else float(v)


def _float_list(v: str) -> list[float]:
    return [_float(x) for x in v.split(",") if x]


def _int_list(v: str) -> list[int]:
    return [int(x) for x in v.split(",") if x]


def _sigma(v: str) -> float:
    if v == "identity":
        return 0.0
    if v.startswith("toeplitz:"):
        return float(v.split(":", 1)[1])
    raise argparse.ArgumentTypeError("expected 'identity' or 'toeplitz:RHO'")


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbelow(2**31)
        print(f"seed={args.seed}", file=sys.stderr)
    return args.seed


def _add_tuning(p: argparse.ArgumentParser):
    g = p.add_argument_group("detector tuning")
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--gamma", type=_float)
    g.add_argument("--kprime", type=int)
    g.add_argument("--tau", type=float)
    g.add_argument("--delta", type=int)
    g.add_argument("--m-intervals", type=int)
    g.add_argument("--max-interval-len", type=_float)
    g.add_argument("--stride", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", type=int)
    g.add_argument("--sgl-lambda", type=float, help="sgl/bssgl group fusion weight (default: hold-out selection)")
    g.add_argument("--sgl-gamma", type=float, help="sgl/bssgl l1 fusion weight")


def _tuning(args) -> dict:
    keys = ("lam", "gamma", "kprime", "tau", "delta", "m_intervals", "max_interval_len", "stride", "tol", "max_iter")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _experiment_args(p: argparse.ArgumentParser):
    p.add_argument("--experiment", choices=[*EXPERIMENTS, "custom"], default="exp1")
    p.add_argument("--p", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--sigma", type=_sigma, help="identity | toeplitz:RHO")
    p.add_argument("--support", type=int, help="number of nonzero coefficients")


def _experiment(args, **kw) -> ExperimentConfig:
    return ExperimentConfig.preset(
        args.experiment,
        p=args.p,
        k=args.k,
        rho=args.sigma,
        support=args.support,
        **kw,
    )


def cmd_simulate(args):
    seed = _seed(args)
    cfg = _experiment(args, n=args.n, kappa=args.kappa)
    data, beta, cps = generate_dataset(cfg, seed)
    out = Path(args.out)
    fileio.write_series(out / "data.csv", data)
    fileio.write_changepoints(out / "truth.txt", cps)
    fileio.write_path(out / "beta.csv", beta)
    print(f"wrote {out / 'data.csv'} ({cfg.n} rows x {cfg.p + 1} columns), truth.txt, beta.csv", file=sys.stderr)


def _sgl_params(args, data):
    if args.sgl_lambda is not None or args.sgl_gamma is not None:
        return (args.sgl_lambda or 0.0, args.sgl_gamma or 0.0)
    return select_sgl_params(data)


def _record(args, name, data, cps, scores, seed, cfg, t0) -> dict:
    rec = {
        "detector": name,
        "changepoints": list(cps.points),
        "k_hat": cps.k,
        "n": data.n,
        "p": data.p,
        "scores": [scores.get(c) for c in cps.points] if scores else [],
        "seed": seed,
        "config": asdict(cfg) if cfg is not None else {},
    }
    if args.record_runtime:
        rec["runtime_ms"] = 1000.0 * (time.perf_counter() - t0)
    return rec


def cmd_detect(args):
    if args.detector not in DETECT_CHOICES:
        raise UsageError(f"unknown detector {args.detector!r}; choose from {', '.join(DETECT_CHOICES)}")
    data = fileio.read_series(args.input)
    seed = _seed(args)
    tuning = _tuning(args)
    if args.known_k is not None:
        tuning.setdefault("kprime", args.known_k)
    cfg = default_config(args.detector, data.n, data.p, known_k=args.known_k, **tuning)
    t0 = time.perf_counter()
    intervals = generate_intervals(data.n, cfg.m_intervals, cfg.max_interval_len, seed)
    scores = {}
    if args.detector == "bse":
        det = bse(data, intervals, cfg, details=True)
        cps, scores = det.points, det.scores
    elif args.detector == "bsle":
        det = bsle(data, intervals, cfg, details=True)
        cps, scores = det.points, det.scores
    elif args.detector == "bssgl":
        det = bssgl(data, intervals, cfg, _sgl_params(args, data), details=True)
        cps, scores = det.points, det.scores
    else:
        lam, gam = _sgl_params(args, data)
        path = sgl_fit(data, lam, gam, tol=cfg.tol, max_iter=cfg.max_iter)
        cps = top_k(path, cfg.known_k) if cfg.known_k is not None else sgl_threshold_detect(path, cfg.tau)
    rec = _record(args, args.detector, data, cps, scores, seed, cfg, t0)
    fileio.write_records(args.out, [rec])
    print(f"{args.detector}: {list(cps.points)}", file=sys.stderr)


def cmd_refine(args):
    data = fileio.read_series(args.input)
    coarse = fileio.read_changepoints(args.coarse, data.n)
    base = default_config("lsa", data.n, data.p, **_tuning(args))
    t0 = time.perf_counter()
    cps = lsa(data, coarse, base.lam, base.gamma, sentinels=not args.no_sentinels, tol=base.tol, max_iter=base.max_iter)
    rec = _record(args, "lsa", data, cps, {}, args.seed, base, t0)
    rec["coarse"] = list(coarse.points)
    fileio.write_records(args.out, [rec])
    print(f"lsa: {list(cps.points)}", file=sys.stderr)


def _load_points(path, n=None):
    path = Path(path)
    text = path.read_text().lstrip()
    if text.startswith("{"):
        rec = fileio.read_records(path)[0]
        from .core import ChangePointSet

        if n is not None and rec.get("n", n) != n:
            raise fileio.FormatError(f"{path}: n={rec['n']} does not match truth n={n}")
        return ChangePointSet(tuple(rec["changepoints"]), rec.get("n", n))
    return fileio.read_changepoints(path, n)


def cmd_evaluate(args):
    truth = fileio.read_changepoints(args.truth)
    est = _load_points(args.input, truth.n)
    report = evaluate(est, truth)
    text = report.to_json() + "\n" if args.format == "json" else report.to_keyvalue()
    if args.out:
        fileio._write_text(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_bench(args):
    seed = _seed(args)
    detectors = tuple(d for d in args.detector.split(",") if d)
    preset = EXPERIMENTS.get(args.experiment, {})
    known = {"yes": True, "no": False}.get(args.known_k, preset.get("known_k", True))
    ns = _int_list(args.n) if args.n else [None]
    kappas = _float_list(args.kappa) if args.kappa else [None]
    overrides = {d: _tuning(args) for d in detectors}
    base = _experiment(
        args, n=ns[0], kappa=kappas[0], reps=args.reps, seed=seed, known_k=known, detectors=detectors, overrides=overrides
    )
    if len(ns) > 1:
        rows = run_grid(base, "n", ns)
    elif len(kappas) > 1:
        rows = run_grid(base, "kappa", kappas)
    else:
        rows = aggregate(base, run_reps(base), cell=f"n={base.n:g},kappa={base.kappa:g}")
    if not args.record_runtime:
        rows = [replace(r, mean_runtime_ms=float("nan")) for r in rows]
    table = format_table(rows)
    sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        fileio.write_records(out, [r.to_dict() for r in rows])
        fileio._write_text(out.with_suffix(".txt"), table)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpseg", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated dataset and its truth")
    _experiment_args(p)
    p.add_argument("--n", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="detect change points in a data file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--detector", required=True)
    p.add_argument("--known-k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--record-runtime", action="store_true", help="include wall time (breaks byte-identical reruns)")
    _add_tuning(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("refine", help="local screening refinement of coarse change points")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--coarse", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--no-sentinels", action="store_true", help="leave the first and last points unrefined")
    p.add_argument("--record-runtime", action="store_true")
    _add_tuning(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("evaluate", help="compare estimated and true change points")
    p.add_argument("--in", dest="input", required=True, help="change-point file or detect/refine record")
    p.add_argument("--truth", required=True)
    p.add_argument("--format", choices=("keyvalue", "json"), default="keyvalue")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="Monte-Carlo benchmark table")
    _experiment_args(p)
    p.add_argument("--n", help="sample size or comma-separated grid")
    p.add_argument("--kappa", help="jump size or comma-separated grid")
    p.add_argument("--detector", default="bsle", help="comma-separated detector names")
    p.add_argument("--known-k", choices=("yes", "no"))
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="records file (JSON lines); the table goes next to it as .txt")
    p.add_argument("--record-runtime", action="store_true")
    _add_tuning(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as err:
        parser.error(str(err))
    except EnumerationBudgetError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ValueError, ConfigError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
