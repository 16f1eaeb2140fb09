"""Localisation accuracy metrics and run reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .core import ChangePointSet, CoefficientPath, coefficient_mse


class EmptyReference(ValueError):
    """Directed distance from an empty set to a nonempty one."""


def _points(s) -> list[int]:
    return list(s.points) if isinstance(s, ChangePointSet) else [int(v) for v in s]


def directed_hausdorff(s1, s2) -> float:
    """``max over b in s2 of min over a in s1 of |a - b|``."""
    a, b = _points(s1), _points(s2)
    if not b:
        return 0.0
    if not a:
        raise EmptyReference("reference set is empty")
    return float(max(min(abs(x - y) for x in a) for y in b))


def hausdorff(s1, s2, n: int | None = None) -> float:
    """Symmetric Hausdorff distance.

    Both sets empty gives 0; exactly one empty gives ``n`` (taken from the
    sets when they are :class:`ChangePointSet`).
    """
    a, b = _points(s1), _points(s2)
    if not a and not b:
        return 0.0
    if not a or not b:
        if n is None:
            n = next(s.n for s in (s1, s2) if isinstance(s, ChangePointSet))
        return float(n)
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def scaled_hausdorff(s1, s2, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return hausdorff(s1, s2, n) / n


def supnorm_error(est, truth, n: int) -> float | None:
    """``max_k |est_k - truth_k| / n`` when the counts agree, else ``None``."""
    a, b = sorted(_points(est)), sorted(_points(truth))
    if len(a) != len(b):
        return None
    if not a:
        return 0.0
    return max(abs(x - y) for x, y in zip(a, b)) / n


@dataclass(frozen=True)
class EvaluationReport:
    n: int
    k_true: int
    k_hat: int
    hausdorff: float
    scaled_hausdorff: float
    supnorm: float | None = None
    mse: float | None = None
    runtime_ms: float | None = None

    def to_keyvalue(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            lines.append(f"{k}={'' if v is None else v}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def evaluate(
    est: ChangePointSet,
    truth: ChangePointSet,
    path_est: CoefficientPath | None = None,
    path_true: CoefficientPath | None = None,
    runtime_ms: float | None = None,
) -> EvaluationReport:
    n = truth.n
    if est.n != n:
        raise ValueError(f"series lengths differ: {est.n} vs {n}")
    h = hausdorff(est, truth, n)
    mse = None
    if path_est is not None and path_true is not None:
        mse = coefficient_mse(path_est, path_true)
    return EvaluationReport(
        n=n,
        k_true=truth.k,
        k_hat=est.k,
        hausdorff=h,
        scaled_hausdorff=h / n,
        supnorm=supnorm_error(est, truth, n),
        mse=mse,
        runtime_ms=runtime_ms,
    )
