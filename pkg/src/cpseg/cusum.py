"""Multidimensional CUSUM statistics on vector time series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SegmentInterval


class IntervalTooShort(ValueError):
    """No admissible split inside the interval."""


@dataclass(frozen=True)
class CusumVector:
    value: np.ndarray
    interval: SegmentInterval
    split: int

    @property
    def sq_norm(self) -> float:
        return float(self.value @ self.value)


def _as_series(series) -> np.ndarray:
    a = np.asarray(series, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return a


def prefix_sums(series: np.ndarray) -> np.ndarray:
    """Column prefix sums with a leading zero column, shape ``(p, n + 1)``."""
    a = _as_series(series)
    out = np.zeros((a.shape[0], a.shape[1] + 1))
    np.cumsum(a, axis=1, out=out[:, 1:])
    return out


def _weights(s, e, t):
    left = np.sqrt((e - t) / ((e - s) * (t - s)))
    right = np.sqrt((t - s) / ((e - s) * (e - t)))
    return left, right


def cusum_from_prefix(csum: np.ndarray, s: int, e: int, t) -> np.ndarray:
    """CUSUM vector(s) at split(s) ``t`` from precomputed prefix sums.

    ``t`` may be an integer or an integer array; for an array the result has
    shape ``(p, len(t))``.
    """
    t = np.asarray(t)
    lw, rw = _weights(s, e, t.astype(float))
    left = csum[:, t] - csum[:, [s]] if t.ndim else csum[:, t] - csum[:, s]
    right = csum[:, [e]] - csum[:, t] if t.ndim else csum[:, e] - csum[:, t]
    return lw * left - rw * right


def cusum_at(series, interval: SegmentInterval, t: int) -> CusumVector:
    """CUSUM of the columns of ``series`` on ``interval`` split after ``t``.

    The left block is ``(s, t]``, the right block ``(t, e]``.
    """
    a = _as_series(series)
    s, e = interval.s, interval.e
    if e > a.shape[1]:
        raise ValueError(f"interval end {e} exceeds series length {a.shape[1]}")
    if not s < t < e:
        raise ValueError(f"split {t} not inside ({s}, {e})")
    lw, rw = _weights(s, e, t)
    value = lw * a[:, s:t].sum(axis=1) - rw * a[:, t:e].sum(axis=1)
    return CusumVector(value, interval, t)


def scan_squared_norms(csum: np.ndarray, s: int, e: int, margin: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Candidate splits and their squared CUSUM norms on ``(s, e]``."""
    lo = s + max(margin, 0) + 1
    hi = e - max(margin, 0) - 1
    ts = np.arange(max(lo, s + 1), min(hi, e - 1) + 1)
    if ts.size == 0:
        return ts, np.empty(0)
    vals = cusum_from_prefix(csum, s, e, ts)
    return ts, np.einsum("ij,ij->j", vals, vals)


def best_split_prefix(csum: np.ndarray, s: int, e: int, margin: int = 0) -> tuple[int, float]:
    ts, scores = scan_squared_norms(csum, s, e, margin)
    if ts.size == 0:
        raise IntervalTooShort(f"no split in ({s}, {e}] with margin {margin}")
    i = int(np.argmax(scores))  # first maximiser
    return int(ts[i]), float(scores[i])


def best_split(series, interval: SegmentInterval, margin: int = 0) -> tuple[int, float]:
    """Split maximising the squared CUSUM norm on ``interval``.

    Candidates are ``t`` with ``s + margin < t < e - margin``. Ties go to the
    smallest ``t``. Raises :class:`IntervalTooShort` when no candidate exists.
    """
    csum = prefix_sums(series)
    if interval.e > csum.shape[1] - 1:
        raise ValueError("interval exceeds series length")
    return best_split_prefix(csum, interval.s, interval.e, margin)


def piecewise_projection(x, interval: SegmentInterval, d: int) -> np.ndarray:
    """Project ``x`` (indexed over ``interval``) onto two-block constants split at ``d``.

    ``x`` has length ``e - s``; entries for ``(s, d]`` become their mean and
    entries for ``(d, e]`` become theirs.
    """
    x = np.asarray(x, dtype=float)
    s, e = interval.s, interval.e
    if x.shape != (e - s,):
        raise ValueError(f"expected length {e - s}, got {x.shape}")
    if not s < d < e:
        raise ValueError(f"split {d} not inside ({s}, {e})")
    k = d - s
    out = np.empty_like(x)
    out[:k] = x[:k].mean()
    out[k:] = x[k:].mean()
    return out
