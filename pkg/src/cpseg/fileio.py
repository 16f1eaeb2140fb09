"""On-disk formats.

Data file (CSV)::

    # cpseg data n=<n> p=<p>; row i is time index i (0-based)
    y,x1,...,xp
    <y_0>,<x_0,1>,...

Change-point file::

    # n=<n>
    <c_1>
    <c_2>

One integer per line, sorted, 0-based (a change point ``c`` means the new
regime starts at row ``c``).

Coefficient path file (CSV): header ``b1,...,bp``, one row per time index.

Result records are JSON objects, one per line, with sorted keys.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import ChangePointSet, CoefficientPath, RegressionSeries


class FormatError(ValueError):
    pass


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_text(path, text: str):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as err:
        raise OSError(f"cannot write {path}: {err.strerror}") from err


def write_series(path, data: RegressionSeries):
    buf = io.StringIO()
    buf.write(f"# cpseg data n={data.n} p={data.p}; row i is time index i (0-based)\n")
    buf.write(",".join(["y"] + [f"x{j + 1}" for j in range(data.p)]) + "\n")
    for t in range(data.n):
        buf.write(",".join([_fmt(data.y[t])] + [_fmt(v) for v in data.x[t]]) + "\n")
    _write_text(path, buf.getvalue())


def read_series(path) -> RegressionSeries:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as err:
        raise OSError(f"cannot read {path}: {err.strerror}") from err
    rows = []
    header = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = next(csv.reader([line]))
        if header is None:
            header = fields
            if not header or header[0].strip() != "y":
                raise FormatError(f"{path}:{lineno}: header must start with 'y'")
            continue
        if len(fields) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError as err:
            raise FormatError(f"{path}:{lineno}: {err}") from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        rows.append(vals)
    if header is None or not rows:
        raise FormatError(f"{path}: no data rows")
    arr = np.array(rows)
    return RegressionSeries(arr[:, 1:], arr[:, 0])


def write_changepoints(path, cps: ChangePointSet):
    _write_text(path, f"# n={cps.n}\n" + "".join(f"{c}\n" for c in cps.points))


def read_changepoints(path, n: int | None = None) -> ChangePointSet:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as err:
        raise OSError(f"cannot read {path}: {err.strerror}") from err
    file_n = None
    pts = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("n="):
                file_n = int(body[2:])
            continue
        try:
            pts.append(int(line))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: not an integer: {line!r}") from None
    if file_n is None and n is None:
        raise FormatError(f"{path}: missing '# n=<n>' header")
    if file_n is not None and n is not None and file_n != n:
        raise FormatError(f"{path}: n={file_n} does not match series length {n}")
    n = file_n if file_n is not None else n
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise FormatError(f"{path}: change points must be strictly increasing")
    if pts and (pts[0] < 1 or pts[-1] > n - 1):
        raise FormatError(f"{path}: change points must lie in [1, {n - 1}]")
    return ChangePointSet(tuple(pts), n)


def write_path(path, beta: CoefficientPath):
    buf = io.StringIO()
    buf.write(",".join(f"b{j + 1}" for j in range(beta.p)) + "\n")
    for t in range(beta.n):
        buf.write(",".join(_fmt(v) for v in beta.beta[:, t]) + "\n")
    _write_text(path, buf.getvalue())


def read_path(path) -> CoefficientPath:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    arr = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return CoefficientPath(arr.T)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return _jsonable(float(v))
    return v


def dumps_record(record: dict) -> str:
    return json.dumps(_jsonable(record), sort_keys=True)


def write_records(path, records):
    _write_text(path, "".join(dumps_record(r) + "\n" for r in records))


def read_records(path) -> list[dict]:
    return [json.loads(ln) for ln in Path(path).read_text().splitlines() if ln.strip()]
