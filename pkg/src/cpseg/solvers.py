"""Sparse estimation back-ends.

Objectives use the unnormalised squared loss ``sum_t (y_t - x_t^T b_t)^2``.

* ``group_lasso_on_partition``: one coefficient vector per block of a fixed
  partition, penalty ``lam * sum_i sqrt(sum_k w_k a_k(i)^2)`` with ``w_k`` the
  block length, optional cap ``|a_k|_2^2 <= gamma``.
* ``best_partition_fit``: exhaustive search over partitions with a fixed
  number of blocks (the change-constrained group lasso path estimator).
* ``lasso_on_interval``: ``sum (y - x^T v)^2 + lam * sqrt(e - s) * |v|_1``.
* ``single_split_fit``: best two-block partition of an interval.
* ``sgl_fit``: fused group + fused l1 penalty on consecutive differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import (
    CoefficientPath,
    Moments,
    RegressionSeries,
    SegmentInterval,
    TilingError,
)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000
DEFAULT_BUDGET = 100_000


class EnumerationBudgetError(RuntimeError):
    """Too many candidate partitions for exhaustive search."""


class NumericError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.0
    gamma: float = math.inf
    kprime: int = 0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.kprime < 0:
            raise ValueError("kprime must be >= 0")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class PartitionFit:
    partition: tuple[SegmentInterval, ...]
    coefficients: np.ndarray  # (K, p), row k is the vector of block k
    objective: float
    iterations: int = field(default=0, compare=False)

    def path(self) -> CoefficientPath:
        """Coefficient path over the covered interval (columns start at its left end)."""
        s0 = self.partition[0].s
        n = self.partition[-1].e - s0
        beta = np.empty((self.coefficients.shape[1], n))
        for seg, a in zip(self.partition, self.coefficients):
            beta[:, seg.s - s0 : seg.e - s0] = a[:, None]
        return CoefficientPath(beta)

    @property
    def splits(self) -> tuple[int, ...]:
        return tuple(seg.e for seg in self.partition[:-1])


def _moments(data) -> Moments:
    return data if isinstance(data, Moments) else Moments.from_series(data)


def _check_partition(partition, n: int | None = None, start: int = 0) -> np.ndarray:
    parts = list(partition)
    if not parts:
        raise TilingError("empty partition")
    if parts[0].s != start:
        raise TilingError(f"partition starts at {parts[0].s}, expected {start}")
    for a, b in zip(parts, parts[1:]):
        if a.e != b.s:
            raise TilingError(f"{'gap' if a.e < b.s else 'overlap'} between {a} and {b}")
    if n is not None and parts[-1].e != n:
        raise TilingError(f"partition ends at {parts[-1].e}, expected {n}")
    return np.array([parts[0].s] + [seg.e for seg in parts], dtype=np.int64)


# objective evaluation straight from data, independent of the prefix moments


def partition_objective(data: RegressionSeries, partition, coefficients, lam: float) -> float:
    total = 0.0
    ss = np.zeros(data.p)
    for seg, a in zip(partition, np.asarray(coefficients, dtype=float)):
        r = data.y[seg.s : seg.e] - data.x[seg.s : seg.e] @ a
        total += float(r @ r)
        ss += len(seg) * a**2
    return total + lam * float(np.sum(np.sqrt(ss)))


def lasso_objective(data: RegressionSeries, interval: SegmentInterval, v, lam: float) -> float:
    s, e = interval.s, interval.e
    r = data.y[s:e] - data.x[s:e] @ np.asarray(v, dtype=float)
    return float(r @ r) + lam * math.sqrt(e - s) * float(np.abs(v).sum())


def sgl_objective(data: RegressionSeries, beta, lam: float, gamma_l1: float) -> float:
    beta = np.asarray(beta, dtype=float)
    r = data.y - np.einsum("tj,jt->t", data.x, beta)
    d = np.diff(beta, axis=1)
    return float(r @ r) + lam * float(np.linalg.norm(d, axis=0).sum()) + gamma_l1 * float(np.abs(d).sum())


# optimality checks


def group_kkt_residual(data: RegressionSeries, partition, coefficients, lam: float) -> float:
    """Largest violation of the group-wise stationarity conditions (gamma = inf)."""
    coef = np.asarray(coefficients, dtype=float)
    w = np.array([len(seg) for seg in partition], dtype=float)
    grad = np.empty_like(coef)
    for k, seg in enumerate(partition):
        xs = data.x[seg.s : seg.e]
        grad[k] = -2.0 * xs.T @ (data.y[seg.s : seg.e] - xs @ coef[k])
    worst = 0.0
    for i in range(coef.shape[1]):
        a = coef[:, i]
        nrm = math.sqrt(float(np.sum(w * a**2)))
        if nrm > 0:
            res = grad[:, i] + lam * w * a / nrm
            worst = max(worst, float(np.max(np.abs(res / np.sqrt(w)))))
        else:
            worst = max(worst, float(np.linalg.norm(grad[:, i] / np.sqrt(w))) - lam)
    return max(worst, 0.0)


def lasso_kkt_residual(data: RegressionSeries, interval: SegmentInterval, v, lam: float) -> float:
    s, e = interval.s, interval.e
    v = np.asarray(v, dtype=float)
    xs = data.x[s:e]
    corr = 2.0 * xs.T @ (data.y[s:e] - xs @ v)
    mu = lam * math.sqrt(e - s)
    active = v != 0
    res = np.where(active, np.abs(corr - mu * np.sign(v)), np.maximum(np.abs(corr) - mu, 0.0))
    return float(res.max(initial=0.0))


def group_lambda_max(data: RegressionSeries, partition) -> float:
    """Smallest ``lam`` for which the all-zero solution is optimal."""
    best = 0.0
    w = np.array([len(seg) for seg in partition], dtype=float)
    corr = np.stack([data.x[seg.s : seg.e].T @ data.y[seg.s : seg.e] for seg in partition])
    for i in range(data.p):
        best = max(best, 2.0 * float(np.linalg.norm(corr[:, i] / np.sqrt(w))))
    return best


# capped (finite gamma) group lasso: proximal gradient, prox by Dykstra splitting


def _weighted_group_prox(z: np.ndarray, w: np.ndarray, t: float) -> np.ndarray:
    """Column-wise prox of ``t * sqrt(sum_k w_k a_k^2)``."""
    out = np.zeros_like(z)
    if t == 0:
        return z.copy()
    for i in range(z.shape[1]):
        zi = z[:, i]
        if float(np.sum(zi**2 / w)) <= t * t:
            continue
        r = _kernels.weighted_root(w * zi**2, t * w)
        out[:, i] = zi * r / (r + t * w)
    return out


def _ball_projection(z: np.ndarray, gamma: float) -> np.ndarray:
    nrm = np.linalg.norm(z, axis=1, keepdims=True)
    scale = np.minimum(1.0, math.sqrt(gamma) / np.maximum(nrm, 1e-300))
    return z * scale


def _capped_prox(z, w, t, gamma, tol=1e-14, max_iter=5000):
    x = z.copy()
    pp = np.zeros_like(z)
    qq = np.zeros_like(z)
    for _ in range(max_iter):
        yv = _weighted_group_prox(x + pp, w, t)
        pp = x + pp - yv
        x_new = _ball_projection(yv + qq, gamma)
        qq = yv + qq - x_new
        if np.max(np.abs(x_new - x)) <= tol * max(1.0, np.max(np.abs(x_new))):
            return x_new
        x = x_new
    return x


def _capped_group_lasso(mom: Moments, bounds, lam, gamma, alpha, tol, max_iter):
    K = len(bounds) - 1
    G = np.stack([mom.xx[bounds[k + 1]] - mom.xx[bounds[k]] for k in range(K)])
    c = np.stack([mom.xy[bounds[k + 1]] - mom.xy[bounds[k]] for k in range(K)])
    yk = float(sum(mom.yy[bounds[k + 1]] - mom.yy[bounds[k]] for k in range(K)))
    w = np.diff(bounds).astype(float)
    L = 2.0 * max(float(np.linalg.eigvalsh(g)[-1]) for g in G)
    L = max(L, 1e-12)

    def value(a):
        quad = float(np.einsum("ki,kij,kj->", a, G, a) - 2.0 * np.sum(c * a))
        return yk + quad + lam * float(np.sum(np.sqrt(np.sum(w[:, None] * a**2, axis=0))))

    x = _ball_projection(alpha, gamma)
    fx = value(x)
    yv = x.copy()
    t = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 * (np.einsum("kij,kj->ki", G, yv) - c)
        z = _capped_prox(yv - grad / L, w, lam / L, gamma)
        fz = value(z)
        if fz > fx:
            # function-value restart
            if t == 1.0:
                break
            yv, t = x, 1.0
            continue
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        yv = z + ((t - 1.0) / t_new) * (z - x)
        dec = fx - fz
        x, fx, t = z, fz, t_new
        if dec < tol:
            break
    return x, fx, it


def _solve_bounds(mom: Moments, bounds: np.ndarray, lam, gamma, tol, max_iter, warm=None):
    K = len(bounds) - 1
    alpha = np.zeros((K, mom.p)) if warm is None else np.array(warm, dtype=float)
    if math.isinf(gamma):
        obj, it = _kernels.group_lasso_bcd(mom.xx, mom.xy, mom.yy, bounds, float(lam), alpha, float(tol), int(max_iter))
    else:
        alpha, obj, it = _capped_group_lasso(mom, bounds, float(lam), float(gamma), alpha, tol, max_iter)
    if not np.isfinite(obj) or not np.all(np.isfinite(alpha)):
        raise NumericError("group lasso diverged")
    return alpha, float(obj), int(it)


def group_lasso_on_partition(
    data: RegressionSeries,
    partition,
    lam: float,
    gamma: float = math.inf,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    warm_start=None,
) -> PartitionFit:
    """Group lasso with one coefficient vector per block of ``partition``.

    The partition must tile ``(0, n]``. With ``gamma = inf`` this runs block
    coordinate descent over features (each block is a closed-form shrink plus
    a scalar root find); with finite ``gamma`` an accelerated proximal
    gradient method whose prox is evaluated by Dykstra splitting.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    partition = tuple(partition)
    bounds = _check_partition(partition, data.n)
    mom = _moments(data)
    alpha, obj, it = _solve_bounds(mom, bounds, lam, gamma, tol, max_iter, warm_start)
    return PartitionFit(partition, alpha, obj, it)


def _n_partitions(length: int, kprime: int) -> int:
    return math.comb(length - 1, kprime) if length - 1 >= kprime else 0


def _best_over_partitions(data, mom, s, e, kprime, lam, gamma, tol, max_iter, budget):
    count = _n_partitions(e - s, kprime)
    if count == 0:
        raise ValueError(f"interval ({s}, {e}] cannot hold {kprime + 1} blocks")
    if count > budget:
        raise EnumerationBudgetError(
            f"{count} candidate partitions exceed the budget of {budget}; "
            "lower kprime, restrict the interval, or use the lasso-based detector (bsle)"
        )
    if math.isinf(gamma):
        bounds, alpha, obj, _ = _kernels.enumerate_partitions(
            mom.xx, mom.xy, mom.yy, s, e, kprime, float(lam), float(tol), int(max_iter)
        )
    else:
        import itertools

        best = None
        warm = None
        for cuts in itertools.combinations(range(s + 1, e), kprime):
            b = np.array((s, *cuts, e), dtype=np.int64)
            alpha_c, obj_c, _ = _solve_bounds(mom, b, lam, gamma, tol, max_iter, warm)
            warm = alpha_c
            if best is None or obj_c < best[2]:
                best = (b, alpha_c, obj_c)
        bounds, alpha, obj = best
    if not np.isfinite(obj):
        raise NumericError("group lasso diverged")
    partition = tuple(SegmentInterval(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]))
    return PartitionFit(partition, np.asarray(alpha), float(obj), count)


def best_partition_fit(
    data: RegressionSeries,
    config: SolverConfig,
    restrict: SegmentInterval | None = None,
) -> tuple[CoefficientPath, PartitionFit]:
    """Minimum-objective group lasso over all ``kprime + 1`` block partitions.

    Returns the fitted path over ``restrict`` (the full series by default)
    together with the winning fit. Ties keep the lexicographically smallest
    set of cut points.
    """
    restrict = restrict or SegmentInterval(0, data.n)
    if restrict.e > data.n:
        raise ValueError("restrict exceeds series length")
    mom = _moments(data)
    fit = _best_over_partitions(
        data, mom, restrict.s, restrict.e, config.kprime, config.lam, config.gamma, config.tol, config.max_iter, config.budget
    )
    return fit.path(), fit


def lasso_on_interval(
    data: RegressionSeries,
    interval: SegmentInterval,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    moments: Moments | None = None,
) -> np.ndarray:
    """Lasso fit on ``(s, e]`` with penalty ``lam * sqrt(e - s) * |v|_1``."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if interval.e > data.n or len(interval) < 1:
        raise ValueError(f"interval {interval} not inside (0, {data.n}]")
    mom = moments or _moments(data)
    v = np.zeros(data.p)
    _kernels.lasso_cd(
        mom.xx, mom.xy, mom.yy, interval.s, interval.e, lam * math.sqrt(len(interval)), v, float(tol), int(max_iter)
    )
    return v


class ShortInterval(ValueError):
    """Interval too short for a forced single split."""


def single_split_fit(
    data: RegressionSeries,
    interval: SegmentInterval,
    lam: float,
    gamma: float = math.inf,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    moments: Moments | None = None,
) -> tuple[int, CoefficientPath, PartitionFit]:
    """Best two-block group lasso fit of ``interval`` over every split point.

    Returns the split, the fitted path over the interval and the fit itself.
    """
    if len(interval) < 3:
        raise ShortInterval(f"interval {interval} shorter than 3")
    if interval.e > data.n:
        raise ValueError("interval exceeds series length")
    mom = moments or _moments(data)
    fit = _best_over_partitions(
        data, mom, interval.s, interval.e, 1, lam, gamma, tol, max_iter, DEFAULT_BUDGET
    )
    return fit.splits[0], fit.path(), fit


# fused sparse group lasso on increments


@dataclass
class SGLResult:
    path: CoefficientPath
    objective: float
    history: list[float]
    iterations: int


def _sgl_forward(x, theta):
    beta = np.cumsum(theta, axis=1)
    return np.einsum("tj,jt->t", x, beta)


def _sgl_adjoint(x, r):
    g = x.T * r[None, :]
    return np.cumsum(g[:, ::-1], axis=1)[:, ::-1]


def _sgl_lipschitz(x, iters=100, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((x.shape[1], x.shape[0]))
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        u = _sgl_adjoint(x, _sgl_forward(x, v))
        est = float(np.linalg.norm(u))
        if est == 0:
            return 1.0
        v = u / est
    return 2.0 * est * 1.02


def _sgl_prox(theta, step_lam, step_gam):
    out = theta.copy()
    d = theta[:, 1:]
    d = np.sign(d) * np.maximum(np.abs(d) - step_gam, 0.0)
    nrm = np.linalg.norm(d, axis=0)
    scale = np.where(nrm > step_lam, 1.0 - step_lam / np.maximum(nrm, 1e-300), 0.0)
    out[:, 1:] = d * scale
    return out


def sgl_fit(
    data: RegressionSeries,
    lam: float,
    gamma_l1: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    return_result: bool = False,
):
    """Fused sparse group lasso over time.

    Minimises ``sum_t (y_t - x_t^T b_t)^2 + lam * sum_t |b_{t+1} - b_t|_2 +
    gamma_l1 * sum_t |b_{t+1} - b_t|_1`` in the increments ``b_1, b_2 - b_1,
    ...`` with FISTA (function-value restart) and the sparse-group
    soft-threshold prox.
    """
    if lam < 0 or gamma_l1 < 0:
        raise ValueError("penalties must be >= 0")
    if lam == 0 and gamma_l1 == 0:
        raise ValueError("sgl_fit is ill-posed with both penalties zero")
    x, y = data.x, data.y
    L = _sgl_lipschitz(x)
    theta = np.zeros((data.p, data.n))

    def value(th):
        r = y - _sgl_forward(x, th)
        d = th[:, 1:]
        return float(r @ r) + lam * float(np.linalg.norm(d, axis=0).sum()) + gamma_l1 * float(np.abs(d).sum())

    fx = value(theta)
    history = [fx]
    yv = theta.copy()
    t = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        grad = -2.0 * _sgl_adjoint(x, y - _sgl_forward(x, yv))
        z = _sgl_prox(yv - grad / L, lam / L, gamma_l1 / L)
        fz = value(z)
        if fz > fx:
            # function-value restart: drop momentum and retry from theta
            history.append(fx)
            if t == 1.0:
                break
            yv, t = theta, 1.0
            continue
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        yv = z + ((t - 1.0) / t_new) * (z - theta)
        dec = fx - fz
        theta, fx, t = z, fz, t_new
        history.append(fx)
        if not np.isfinite(fx):
            raise NumericError("sgl_fit diverged")
        if dec < tol:
            break
    path = CoefficientPath(np.cumsum(theta, axis=1))
    if return_result:
        return SGLResult(path, fx, history, it)
    return path


def sgl_lambda_max(data: RegressionSeries) -> float:
    """Largest increment-gradient norm at the all-zero path (group part)."""
    g = -2.0 * _sgl_adjoint(data.x, data.y)
    return float(np.linalg.norm(g[:, 1:], axis=0).max(initial=0.0))


def sgl_default_grid(data: RegressionSeries) -> list[tuple[float, float]]:
    lmax = sgl_lambda_max(data)
    return [(f * lmax, 0.1 * f * lmax) for f in (0.5, 0.25, 0.1, 0.05)]


def select_sgl_params(
    data: RegressionSeries,
    grid: list[tuple[float, float]] | None = None,
    tol: float = 1e-6,
    max_iter: int = 2000,
) -> tuple[float, float]:
    """Pick ``(lam, gamma_l1)`` by hold-out prediction error.

    Even time indices are used for fitting, odd ones are predicted with the
    coefficient of the preceding fitted time.
    """
    grid = grid or sgl_default_grid(data)
    train = np.arange(0, data.n, 2)
    test = np.arange(1, data.n, 2)
    if train.size < 2 or test.size < 1:
        return grid[0]
    sub = RegressionSeries(data.x[train], data.y[train])
    best, best_err = grid[0], math.inf
    for lam, gam in grid:
        path = sgl_fit(sub, lam, gam, tol=tol, max_iter=max_iter)
        beta = path.beta[:, (test - 1) // 2]
        err = float(np.mean((data.y[test] - np.einsum("tj,jt->t", data.x[test], beta)) ** 2))
        if err < best_err:
            best, best_err = (lam, gam), err
    return best
