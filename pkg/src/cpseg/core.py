"""Shared domain types and elementary path statistics.

Index conventions
-----------------
Time is indexed 0..n-1 (column ``t`` of a coefficient path, row ``t`` of the
design). An interval ``(s, e]`` with ``0 <= s < e <= n`` covers the indices
``s, ..., e-1``; it holds ``e - s`` observations. A change point ``c`` is the
length of the left block, i.e. the path is constant on ``(.., c]`` and a new
value starts at index ``c``. With this convention a change point value is the
same number as in 1-based ``(s, e]`` notation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class TilingError(ValueError):
    """Segments do not tile ``(0, n]`` exactly."""


class DimensionError(ValueError):
    """Array shapes do not agree."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RegressionSeries:
    """Observed stream of ``(x_t, y_t)`` pairs.

    ``x`` has shape ``(n, p)``, ``y`` has shape ``(n,)``.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _frozen(self.x)
        y = _frozen(self.y)
        if x.ndim == 1:
            x = _frozen(x.reshape(-1, 1))
        if x.ndim != 2 or y.ndim != 1:
            raise DimensionError("x must be 2-d and y 1-d")
        if x.shape[0] != y.shape[0]:
            raise DimensionError(f"x has {x.shape[0]} rows but y has length {y.shape[0]}")
        if x.shape[0] < 2 or x.shape[1] < 1:
            raise DimensionError("need n >= 2 and p >= 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("x and y must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class CoefficientPath:
    """Per-time coefficient vectors stored as a ``(p, n)`` matrix."""

    beta: np.ndarray

    def __post_init__(self):
        b = _frozen(self.beta)
        if b.ndim == 1:
            b = _frozen(b.reshape(1, -1))
        if b.ndim != 2:
            raise DimensionError("beta must be 2-d (p, n)")
        if not np.all(np.isfinite(b)):
            raise ValueError("beta must be finite")
        object.__setattr__(self, "beta", b)

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @property
    def n(self) -> int:
        return self.beta.shape[1]

    def change_points(self) -> "ChangePointSet":
        return ChangePointSet(change_indices(self.beta), self.n)

    def support(self) -> np.ndarray:
        """Indices of rows with any nonzero entry."""
        return np.flatnonzero(np.any(self.beta != 0, axis=1))


@dataclass(frozen=True)
class ChangePointSet:
    """Sorted interior change points of a length-``n`` series."""

    points: tuple[int, ...]
    n: int

    def __post_init__(self):
        pts = tuple(int(c) for c in self.points)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError(f"change points must be strictly increasing: {pts}")
        if pts and (pts[0] < 1 or pts[-1] > self.n - 1):
            raise ValueError(f"change points must lie in [1, {self.n - 1}]: {pts}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_unsorted(cls, points: Iterable[int], n: int) -> "ChangePointSet":
        return cls(tuple(sorted(set(int(c) for c in points))), n)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def k(self) -> int:
        return len(self.points)

    def segments(self) -> list["SegmentInterval"]:
        bounds = (0, *self.points, self.n)
        return [SegmentInterval(a, b) for a, b in zip(bounds, bounds[1:])]


@dataclass(frozen=True, order=True)
class SegmentInterval:
    """Half-open integer interval ``(s, e]``."""

    s: int
    e: int

    def __post_init__(self):
        if not self.s < self.e:
            raise ValueError(f"empty interval ({self.s}, {self.e}]")
        if self.s < 0:
            raise ValueError(f"interval start must be >= 0, got {self.s}")

    def __len__(self) -> int:
        return self.e - self.s


def change_indices(beta: np.ndarray) -> tuple[int, ...]:
    beta = np.asarray(beta)
    if beta.ndim == 1:
        beta = beta.reshape(1, -1)
    diff = np.any(beta[:, 1:] != beta[:, :-1], axis=0)
    return tuple(int(t) + 1 for t in np.flatnonzero(diff))


def change_count(path: CoefficientPath | np.ndarray) -> int:
    """Number of exact changes between consecutive columns."""
    beta = path.beta if isinstance(path, CoefficientPath) else path
    return len(change_indices(beta))


def coefficient_mse(estimate: CoefficientPath, truth: CoefficientPath) -> float:
    """Mean over time of the squared l2 coefficient error."""
    a, b = estimate.beta, truth.beta
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sum((a - b) ** 2) / a.shape[1])


def piecewise_path(segments: Sequence[tuple[SegmentInterval, Sequence[float]]]) -> CoefficientPath:
    """Build a piecewise-constant path from tiles of ``(0, n]``."""
    if not segments:
        raise TilingError("no segments given")
    tiles = sorted(segments, key=lambda sv: sv[0].s)
    if tiles[0][0].s != 0:
        raise TilingError(f"first tile starts at {tiles[0][0].s}, expected 0")
    for (a, _), (b, _) in zip(tiles, tiles[1:]):
        if a.e != b.s:
            kind = "gap" if a.e < b.s else "overlap"
            raise TilingError(f"{kind} between {a} and {b}")
    vecs = [np.atleast_1d(np.asarray(v, dtype=float)) for _, v in tiles]
    p = vecs[0].shape[0]
    if any(v.shape != (p,) for v in vecs):
        raise DimensionError("all tile vectors must have the same length")
    n = tiles[-1][0].e
    beta = np.empty((p, n))
    for (seg, _), v in zip(tiles, vecs):
        beta[:, seg.s : seg.e] = v[:, None]
    return CoefficientPath(beta)


def path_from_changes(changes: ChangePointSet, values: Sequence[Sequence[float]]) -> CoefficientPath:
    segs = changes.segments()
    if len(values) != len(segs):
        raise DimensionError(f"{len(segs)} segments but {len(values)} vectors")
    return piecewise_path(list(zip(segs, values)))


def segment_values(path: CoefficientPath) -> list[np.ndarray]:
    """One representative column per constant block of ``path``."""
    return [path.beta[:, seg.s].copy() for seg in path.change_points().segments()]


@dataclass(frozen=True)
class Moments:
    """Prefix sums of ``x x^T``, ``x y`` and ``y^2`` over time.

    ``xx[k]`` is the sum over indices ``< k``, so the moments of ``(s, e]`` are
    ``xx[e] - xx[s]``.
    """

    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray
    n: int = field(init=False)
    p: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", self.xy.shape[0] - 1)
        object.__setattr__(self, "p", self.xy.shape[1])

    @classmethod
    def from_series(cls, data: RegressionSeries) -> "Moments":
        x, y = data.x, data.y
        n, p = x.shape
        xx = np.zeros((n + 1, p, p))
        np.cumsum(x[:, :, None] * x[:, None, :], axis=0, out=xx[1:])
        xy = np.zeros((n + 1, p))
        np.cumsum(x * y[:, None], axis=0, out=xy[1:])
        yy = np.zeros(n + 1)
        np.cumsum(y * y, out=yy[1:])
        return cls(xx, xy, yy)
