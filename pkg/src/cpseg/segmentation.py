"""Change-point detectors built on random-interval binary segmentation."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import _kernels
from .core import ChangePointSet, CoefficientPath, Moments, RegressionSeries, SegmentInterval
from .cusum import best_split_prefix, prefix_sums
from .solvers import (
    DEFAULT_BUDGET,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    SolverConfig,
    best_partition_fit,
    select_sgl_params,
    sgl_fit,
    single_split_fit,
)

DEFAULT_M = 40


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple[SegmentInterval, ...]
    seed: int | None = None

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


def generate_intervals(n: int, m_count: int, max_len: float = math.inf, seed=None) -> IntervalSet:
    """Draw ``m_count`` random intervals ``(a, b]`` inside ``(0, n]``.

    Both endpoints are uniform on ``{0, ..., n}``; the pair is sorted and
    rejected unless ``2 <= b - a <= max_len``. Accepted pairs keep draw order.
    """
    if m_count < 1:
        raise ConfigError("m_count must be >= 1")
    if max_len < 2:
        raise ConfigError("max_len must be >= 2")
    if n < 2:
        raise ConfigError("n must be >= 2")
    rng = np.random.default_rng(seed)
    kept = np.empty((0, 2), dtype=np.int64)
    while kept.shape[0] < m_count:
        pairs = np.sort(rng.integers(0, n + 1, size=(2 * m_count, 2)), axis=1)
        length = pairs[:, 1] - pairs[:, 0]
        kept = np.concatenate([kept, pairs[(length >= 2) & (length <= max_len)]])
    return IntervalSet(tuple(SegmentInterval(int(a), int(b)) for a, b in kept[:m_count]), seed)


def required_interval_count(n: int, delta_min: int, failure_prob: float) -> int:
    """Number of random intervals making the isolation event fail w.p. <= ``failure_prob``."""
    if not 1 <= delta_min <= n:
        raise ValueError("need 1 <= delta_min <= n")
    if not 0 < failure_prob < 1:
        raise ValueError("failure_prob must lie in (0, 1)")
    lead = 16.0 * n * n / (delta_min * delta_min)
    return int(math.ceil(lead * (math.log(n / delta_min) + math.log(1.0 / failure_prob)) - 1e-9))


def isolation_event(intervals: IntervalSet, changes, spacing: float) -> bool:
    """Whether every change point has an interval starting in
    ``[c - 3D/4, c - D/2]`` and ending in ``[c + D/2, c + 3D/4]``."""
    ends = np.array([(iv.s, iv.e) for iv in intervals], dtype=float).reshape(-1, 2)
    for c in changes:
        ok = (
            (ends[:, 0] >= c - 0.75 * spacing)
            & (ends[:, 0] <= c - 0.5 * spacing)
            & (ends[:, 1] >= c + 0.5 * spacing)
            & (ends[:, 1] <= c + 0.75 * spacing)
        )
        if not ok.any():
            return False
    return True


@dataclass(frozen=True)
class DetectorConfig:
    tau: float = 1.0
    delta: int = 1
    lam: float = 0.0
    gamma: float = math.inf
    kprime: int = 1
    max_interval_len: float = math.inf
    m_intervals: int = DEFAULT_M
    stride: int = 1
    known_k: int | None = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.delta < 0:
            raise ConfigError("delta must be >= 0")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.known_k is not None and self.known_k < 0:
            raise ConfigError("known_k must be >= 0")

    def solver(self) -> SolverConfig:
        return SolverConfig(self.lam, self.gamma, self.kprime, self.tol, self.max_iter, self.budget)


def default_config(detector: str, n: int, p: int, **overrides) -> DetectorConfig:
    """Simulation defaults per detector; keyword overrides win."""
    logp = math.log(max(p, 2))
    base = dict(tau=0.045 * n, delta=2 * math.ceil(logp))
    if detector in ("bse", "lsa"):
        base.update(lam=0.2 * math.sqrt(logp), gamma=math.inf)
    elif detector == "bsle":
        base.update(lam=math.sqrt(logp))
    base.update({k: v for k, v in overrides.items() if v is not None})
    return DetectorConfig(**base)


@dataclass
class Detection:
    """Detected change points together with the score that accepted each."""

    points: ChangePointSet
    scores: dict[int, float] = field(default_factory=dict)
    path: CoefficientPath | None = None

    def score_list(self) -> list[float]:
        return [self.scores[c] for c in self.points]


ScanFn = Callable[[int, int], tuple[int, float]]


def _node_candidate(scan: ScanFn, s, e, intervals, guard, cache):
    best_b, best_a = -1, -1.0
    for iv in intervals:
        sm, em = max(s, iv.s), min(e, iv.e)
        if em - sm < guard:
            continue
        key = (sm, em)
        if key not in cache:
            cache[key] = scan(sm, em)
        b, a = cache[key]
        if b >= 0 and a > best_a:
            best_b, best_a = b, a
    return best_b, best_a


def binary_segmentation(
    scan: ScanFn,
    interval: SegmentInterval,
    intervals: IntervalSet,
    guard: int,
    accept: Callable[[float], bool],
    known_k: int | None = None,
) -> dict[int, float]:
    """Generic random-interval binary segmentation.

    ``scan(s_m, e_m)`` returns the best split of a clipped interval and its
    score, or ``(-1, -1.0)``. Clipped intervals shorter than ``guard`` are
    skipped. In threshold mode a node is split when ``accept(score)``. With
    ``known_k`` the threshold is ignored: nodes are split best-score-first
    until ``known_k`` points are found or no positive score remains.
    """
    cache: dict = {}
    found: dict[int, float] = {}
    if known_k is None:
        stack = [(interval.s, interval.e)]
        while stack:
            s, e = stack.pop()
            if e - s < 2:
                continue
            b, a = _node_candidate(scan, s, e, intervals, guard, cache)
            if b >= 0 and accept(a):
                found[b] = a
                stack.append((b, e))
                stack.append((s, b))
        return found
    heap = []

    def push(s, e):
        if e - s < 2:
            return
        b, a = _node_candidate(scan, s, e, intervals, guard, cache)
        if b >= 0 and a > 0:
            heapq.heappush(heap, (-a, b, s, e))

    push(interval.s, interval.e)
    while heap and len(found) < known_k:
        neg_a, b, s, e = heapq.heappop(heap)
        found[b] = -neg_a
        push(s, b)
        push(b, e)
    return found


def _as_detection(found: dict[int, float], n: int, path=None) -> Detection:
    return Detection(ChangePointSet.from_unsorted(found, n), dict(found), path)


def mbs(
    series,
    interval: SegmentInterval,
    intervals: IntervalSet,
    tau: float,
    known_k: int | None = None,
    details: bool = False,
):
    """Multidimensional binary segmentation on the columns of ``series``.

    Scores are squared CUSUM norms; a split is kept when its score exceeds
    ``tau``.
    """
    if not tau > 0:
        raise ConfigError("tau must be positive")
    a = np.asarray(series, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    csum = prefix_sums(a)

    def scan(sm, em):
        return best_split_prefix(csum, sm, em, 0)

    found = binary_segmentation(scan, interval, intervals, 2, lambda v: v > tau, known_k)
    det = _as_detection(found, a.shape[1])
    return det if details else det.points


def bse(data: RegressionSeries, intervals: IntervalSet, config: DetectorConfig, details: bool = False):
    """Group-lasso path with at most ``kprime`` changes, then CUSUM segmentation of it."""
    path, _ = best_partition_fit(data, config.solver())
    det = mbs(path.beta, SegmentInterval(0, data.n), intervals, config.tau, config.known_k, details=True)
    det.path = path
    if details:
        return det
    return det.points, path


def bsle(
    data: RegressionSeries,
    intervals: IntervalSet,
    config: DetectorConfig,
    details: bool = False,
    moments: Moments | None = None,
):
    """Binary segmentation scored by differences of interval lasso fits."""
    if config.delta < 1:
        raise ConfigError("bsle needs delta >= 1")
    mom = moments or Moments.from_series(data)
    delta, stride, lam = int(config.delta), int(config.stride), float(config.lam)
    tol, max_iter = float(config.tol), int(config.max_iter)

    def scan(sm, em):
        t, a = _kernels.lasso_split_scan(mom.xx, mom.xy, mom.yy, sm, em, delta, stride, lam, tol, max_iter)
        return int(t), float(a)

    found = binary_segmentation(
        scan, SegmentInterval(0, data.n), intervals, 2 * delta, lambda v: v >= config.tau, config.known_k
    )
    det = _as_detection(found, data.n)
    return det if details else det.points


def lsa_windows(coarse, n: int, sentinels: bool = True) -> list[tuple[int, int, int]]:
    """``(k, s, e)`` refinement windows around each coarse point."""
    pts = list(coarse)
    ext = [0, *pts, n] if sentinels else pts
    out = []
    for j in range(1, len(ext) - 1):
        lo, mid, hi = ext[j - 1], ext[j], ext[j + 1]
        s = lo + (mid - lo) // 4
        e = hi - (hi - mid) // 4
        out.append((j - 1 if sentinels else j, s, e))
    return out


def lsa(
    data: RegressionSeries,
    coarse: ChangePointSet,
    lam: float,
    gamma: float = math.inf,
    sentinels: bool = True,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    moments: Moments | None = None,
) -> ChangePointSet:
    """Refine each coarse change point by a local single-split group lasso fit.

    With ``sentinels`` the series ends act as neighbours so every point is
    refined; without, the first and last points pass through unchanged.
    """
    pts = list(coarse)
    if not pts:
        return ChangePointSet((), data.n)
    mom = moments or Moments.from_series(data)
    refined = list(pts)
    for k, s, e in lsa_windows(pts, data.n, sentinels):
        if e - s < 3:
            continue
        _, path, _ = single_split_fit(data, SegmentInterval(s, e), lam, gamma, tol, max_iter, moments=mom)
        csum = prefix_sums(path.beta)
        t, a = best_split_prefix(csum, 0, e - s, 0)
        if a > 0:
            refined[k] = s + t
    if len(set(refined)) < len(refined):
        # windows of neighbouring points overlap; on a collision keep the coarse value
        seen = {}
        for r in refined:
            seen[r] = seen.get(r, 0) + 1
        refined = [c if seen[r] > 1 else r for r, c in zip(refined, pts)]
        if len(set(refined)) < len(refined):
            refined = pts
    return ChangePointSet.from_unsorted(refined, data.n)


def bssgl(
    data: RegressionSeries,
    intervals: IntervalSet,
    config: DetectorConfig,
    sgl_params: tuple[float, float] | None = None,
    details: bool = False,
):
    """CUSUM segmentation of a fused sparse group lasso path."""
    lam, gam = sgl_params if sgl_params is not None else select_sgl_params(data)
    path = sgl_fit(data, lam, gam, tol=config.tol, max_iter=config.max_iter)
    det = mbs(path.beta, SegmentInterval(0, data.n), intervals, config.tau, config.known_k, details=True)
    det.path = path
    return det if details else det.points


def jump_sizes(path: CoefficientPath) -> np.ndarray:
    """``f[t] = |b_t - b_{t-1}|_2`` for ``t = 1..n-1`` (index 0 is unused, set to 0)."""
    f = np.zeros(path.n)
    f[1:] = np.linalg.norm(np.diff(path.beta, axis=1), axis=0)
    return f


def sgl_threshold_detect(path: CoefficientPath, tau: float) -> ChangePointSet:
    """Indices whose jump from the previous column exceeds ``tau``."""
    if tau < 0:
        raise ConfigError("tau must be >= 0")
    f = jump_sizes(path)
    return ChangePointSet(tuple(int(t) for t in np.flatnonzero(f > tau) if t >= 1), path.n)


def top_k(path: CoefficientPath, k: int) -> ChangePointSet:
    """The ``k`` indices with the largest jumps (ties to the earlier index)."""
    f = jump_sizes(path)[1:]
    order = np.argsort(-f, kind="stable")[:k]
    return ChangePointSet.from_unsorted((int(i) + 1 for i in order), path.n)


def with_known_k(config: DetectorConfig, k: int | None) -> DetectorConfig:
    return replace(config, known_k=k)
