"""Simulated change-point regression data and the Monte-Carlo benchmark runner.

All three experiment recipes share one coefficient pattern: an alternating
``(+1, -1, +1, ...)`` vector on the first ``support`` features scaled by
``kappa / (2 sqrt(support))``, whose sign flips at every change point. The
l2 jump at each change is therefore ``kappa``.

=========  =====  ===  ===  =======  ===================
recipe     n      p    K    support  covariance
=========  =====  ===  ===  =======  ===================
exp1       300    100  2    2        identity
exp2       300    100  2    10       Toeplitz(0.6)
exp3       480    100  3    4        identity, kappa 1.6
=========  =====  ===  ===  =======  ===================
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .core import ChangePointSet, CoefficientPath, RegressionSeries
from .evaluation import hausdorff
from .segmentation import (
    DetectorConfig,
    bse,
    bsle,
    bssgl,
    default_config,
    generate_intervals,
    lsa,
    sgl_threshold_detect,
    top_k,
)
from .solvers import select_sgl_params, sgl_fit

EXPERIMENTS = {
    "exp1": dict(n=300, p=100, k=2, kappa=1.6, support=2, rho=0.0, known_k=True),
    "exp2": dict(n=300, p=100, k=2, kappa=math.sqrt(40), support=10, rho=0.6, known_k=True),
    "exp3": dict(n=480, p=100, k=3, kappa=1.6, support=4, rho=0.0, known_k=False),
}

DETECTORS = ("bse", "bsle", "bssgl", "sgl", "lsa+bsle", "lsa+perturbed", "oracle")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "exp1"
    n: int = 300
    p: int = 100
    k: int = 2
    kappa: float = 1.6
    support: int = 2
    rho: float = 0.0  # Toeplitz correlation; 0 means identity covariance
    noise_sd: float = 1.0
    reps: int = 1
    seed: int = 0
    known_k: bool = True
    detectors: tuple[str, ...] = ("bsle",)
    overrides: dict = field(default_factory=dict)  # detector name -> DetectorConfig kwargs
    m_intervals: int = 40
    max_interval_len: float = math.inf
    perturb_frac: float = 0.125  # for "lsa+perturbed": coarse = truth + U(-f*spacing, f*spacing)

    def __post_init__(self):
        if self.n % (self.k + 1):
            raise ValueError(f"n={self.n} is not divisible by k+1={self.k + 1}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 1 <= self.support <= self.p:
            raise ValueError("support must lie in [1, p]")
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        unknown = set(self.detectors) - set(DETECTORS)
        if unknown:
            raise ValueError(f"unknown detectors: {sorted(unknown)}")

    @classmethod
    def preset(cls, experiment: str, **kw) -> "ExperimentConfig":
        base = dict(EXPERIMENTS[experiment]) if experiment in EXPERIMENTS else {}
        base.update({k: v for k, v in kw.items() if v is not None})
        return cls(experiment=experiment, **base)

    @property
    def spacing(self) -> int:
        return self.n // (self.k + 1)

    def true_changes(self) -> ChangePointSet:
        return ChangePointSet(tuple(j * self.spacing for j in range(1, self.k + 1)), self.n)


def toeplitz_factor(p: int, rho: float) -> np.ndarray:
    """Lower Cholesky factor of the ``p x p`` matrix ``rho ** |i - j|``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    idx = np.arange(p)
    cov = rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as err:
        raise ArithmeticError(f"Toeplitz({rho}) is not positive definite") from err


def base_vector(p: int, support: int, kappa: float) -> np.ndarray:
    v = np.zeros(p)
    v[:support] = np.where(np.arange(support) % 2 == 0, 1.0, -1.0)
    return v * kappa / (2.0 * math.sqrt(support))


def true_path(config: ExperimentConfig) -> CoefficientPath:
    v = base_vector(config.p, config.support, config.kappa)
    beta = np.empty((config.p, config.n))
    for j, seg in enumerate(config.true_changes().segments()):
        beta[:, seg.s : seg.e] = ((-1) ** j * v)[:, None]
    return CoefficientPath(beta)


def rep_seed(seed: int, rep: int, stream: int = 0) -> np.random.SeedSequence:
    """Independent seed for replicate ``rep``; ``stream`` separates data from intervals."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(rep, stream))


def generate_dataset(config: ExperimentConfig, seed) -> tuple[RegressionSeries, CoefficientPath, ChangePointSet]:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((config.n, config.p))
    x = z if config.rho == 0 else z @ toeplitz_factor(config.p, config.rho).T
    truth = true_path(config)
    y = np.einsum("tj,jt->t", x, truth.beta) + config.noise_sd * rng.standard_normal(config.n)
    return RegressionSeries(x, y), truth, config.true_changes()


def detector_config(config: ExperimentConfig, name: str) -> DetectorConfig:
    key = name.split("+")[0] if name.startswith("lsa") else name
    kw = dict(config.overrides.get(name, {}))
    kw.setdefault("kprime", config.k)
    kw.setdefault("m_intervals", config.m_intervals)
    kw.setdefault("max_interval_len", config.max_interval_len)
    if key == "sgl":
        kw.setdefault("tau", 0.1)
    return default_config(key, config.n, config.p, **kw)


def run_detector(
    name: str,
    data: RegressionSeries,
    intervals,
    dcfg: DetectorConfig,
    truth=None,
    rng=None,
    known_k=None,
    perturb_radius: int = 1,
    coarse_cfg: DetectorConfig | None = None,
):
    """Run a named detector; returns ``(ChangePointSet, scores)``.

    ``coarse_cfg`` configures the BSLE stage of ``lsa+bsle`` (defaults when None).
    """
    dcfg = replace(dcfg, known_k=known_k)
    if name == "oracle":
        return truth, {}
    if name == "bse":
        det = bse(data, intervals, dcfg, details=True)
        return det.points, det.scores
    if name == "bsle":
        det = bsle(data, intervals, dcfg, details=True)
        return det.points, det.scores
    if name == "bssgl":
        det = bssgl(data, intervals, dcfg, details=True)
        return det.points, det.scores
    if name == "sgl":
        lam, gam = select_sgl_params(data)
        path = sgl_fit(data, lam, gam, tol=dcfg.tol, max_iter=dcfg.max_iter)
        pts = top_k(path, known_k) if known_k is not None else sgl_threshold_detect(path, dcfg.tau)
        return pts, {}
    if name == "lsa+bsle":
        coarse_cfg = coarse_cfg or default_config("bsle", data.n, data.p)
        coarse = bsle(data, intervals, replace(coarse_cfg, known_k=known_k))
        return lsa(data, coarse, dcfg.lam, dcfg.gamma, tol=dcfg.tol, max_iter=dcfg.max_iter), {}
    if name == "lsa+perturbed":
        coarse = perturb(truth, rng, perturb_radius)
        return lsa(data, coarse, dcfg.lam, dcfg.gamma, tol=dcfg.tol, max_iter=dcfg.max_iter), {}
    raise ValueError(f"unknown detector {name!r}")


def perturb(truth: ChangePointSet, rng, radius: int) -> ChangePointSet:
    """Shift each point by an independent uniform integer in ``[-radius, radius]``."""
    pts = [c + int(rng.integers(-radius, radius + 1)) for c in truth.points]
    pts = [min(max(c, 1), truth.n - 1) for c in pts]
    return ChangePointSet.from_unsorted(pts, truth.n)


@dataclass(frozen=True)
class RepResult:
    rep: int
    detector: str
    changepoints: tuple[int, ...]
    k_hat: int
    scaled_hausdorff: float
    runtime_ms: float
    failed: bool = False
    error: str = ""


def run_rep(config: ExperimentConfig, rep: int) -> list[RepResult]:
    data, _, truth = generate_dataset(config, rep_seed(config.seed, rep, 0))
    intervals = generate_intervals(config.n, config.m_intervals, config.max_interval_len, rep_seed(config.seed, rep, 1))
    known = config.k if config.known_k else None
    out = []
    for name in config.detectors:
        dcfg = detector_config(config, name)
        radius = max(1, int(config.perturb_frac * config.spacing))
        rng = np.random.default_rng(rep_seed(config.seed, rep, 2))
        t0 = time.perf_counter()
        try:
            coarse = detector_config(config, "bsle") if name == "lsa+bsle" else None
            pts, _ = run_detector(name, data, intervals, dcfg, truth, rng, known, radius, coarse)
        except Exception as err:  # recorded, not fatal
            out.append(RepResult(rep, name, (), 0, float("nan"), 0.0, True, f"{type(err).__name__}: {err}"))
            continue
        ms = 1000.0 * (time.perf_counter() - t0)
        sh = hausdorff(pts, truth, config.n) / config.n
        out.append(RepResult(rep, name, tuple(pts.points), pts.k, sh, ms))
    return out


@dataclass(frozen=True)
class BenchmarkRow:
    detector: str
    cell: str
    reps: int
    failures: int
    mean_sh: float
    se_sh: float
    sd_sh: float
    mean_k_hat: float
    correct_k_frac: float
    mean_sh_correct_k: float | None
    mean_runtime_ms: float

    def to_dict(self) -> dict:
        return asdict(self)


def _mean_sd(values: list[float]) -> tuple[float, float]:
    m = math.fsum(values) / len(values)
    if len(values) < 2:
        return m, 0.0
    var = math.fsum((v - m) ** 2 for v in values) / (len(values) - 1)
    return m, math.sqrt(var)


def aggregate(config: ExperimentConfig, results: list[RepResult], cell: str = "") -> list[BenchmarkRow]:
    rows = []
    for name in config.detectors:
        rs = sorted((r for r in results if r.detector == name), key=lambda r: r.rep)
        ok = [r for r in rs if not r.failed]
        if ok:
            m, sd = _mean_sd([r.scaled_hausdorff for r in ok])
            correct = [r.scaled_hausdorff for r in ok if r.k_hat == config.k]
            rows.append(
                BenchmarkRow(
                    detector=name,
                    cell=cell,
                    reps=len(rs),
                    failures=len(rs) - len(ok),
                    mean_sh=m,
                    se_sh=sd / math.sqrt(len(ok)),
                    sd_sh=sd,
                    mean_k_hat=math.fsum(r.k_hat for r in ok) / len(ok),
                    correct_k_frac=len(correct) / len(ok),
                    mean_sh_correct_k=(math.fsum(correct) / len(correct)) if correct else None,
                    mean_runtime_ms=math.fsum(r.runtime_ms for r in ok) / len(ok),
                )
            )
        else:
            nan = float("nan")
            rows.append(BenchmarkRow(name, cell, len(rs), len(rs), nan, nan, nan, nan, 0.0, None, nan))
    return rows


def worker_count() -> int:
    try:
        cap = int(os.environ.get("CPSEG_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def _run_rep_star(args):
    return run_rep(*args)


def run_reps(config: ExperimentConfig, workers: int | None = None) -> list[RepResult]:
    workers = worker_count() if workers is None else workers
    jobs = [(config, rep) for rep in range(config.reps)]
    if workers <= 1:
        nested = [run_rep(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            nested = list(ex.map(_run_rep_star, jobs))
    return sorted((r for rs in nested for r in rs), key=lambda r: (r.rep, r.detector))


def run_benchmark(config: ExperimentConfig, workers: int | None = None) -> list[BenchmarkRow]:
    """Monte-Carlo replication of ``config``; one row per detector."""
    return aggregate(config, run_reps(config, workers))


def run_grid(config: ExperimentConfig, field_name: str, values, workers: int | None = None) -> list[BenchmarkRow]:
    """Benchmark rows over a grid of ``kappa`` or ``n`` values."""
    rows = []
    for v in values:
        cfg = replace(config, **{field_name: v})
        rows.extend(aggregate(cfg, run_reps(cfg, workers), cell=f"{field_name}={v:g}"))
    return rows


def format_table(rows: list[BenchmarkRow]) -> str:
    header = ["detector", "cell", "reps", "fail", "mean_SH", "SE", "mean_Khat", "Khat=K", "SH|Khat=K", "ms/rep"]
    body = []
    for r in rows:
        body.append(
            [
                r.detector,
                r.cell,
                str(r.reps),
                str(r.failures),
                f"{r.mean_sh:.4f}",
                f"{r.se_sh:.4f}",
                f"{r.mean_k_hat:.2f}",
                f"{r.correct_k_frac:.2f}",
                "-" if r.mean_sh_correct_k is None else f"{r.mean_sh_correct_k:.4f}",
                f"{r.mean_runtime_ms:.1f}",
            ]
        )
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(lines) + "\n"
