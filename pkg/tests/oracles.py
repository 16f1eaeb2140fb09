"""Reference solutions built without any of the package's solvers.

Convex problems go through cvxpy (CLARABEL, tight tolerances); the tiny
fused problem uses a zooming grid search.
"""

import itertools
import math

import numpy as np

cp = None


def _cvxpy():
    global cp
    if cp is None:
        import cvxpy

        cp = cvxpy
    return cp


def _solve(prob):
    c = _cvxpy()
    try:
        prob.solve(solver=c.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    except (c.SolverError, TypeError):
        prob.solve()
    return prob.value


def group_lasso(x, y, bounds, lam, gamma=math.inf):
    """Minimise the blockwise group-lasso objective over a fixed partition."""
    c = _cvxpy()
    p = x.shape[1]
    K = len(bounds) - 1
    A = c.Variable((K, p))
    loss = 0
    cons = []
    for k in range(K):
        s, e = bounds[k], bounds[k + 1]
        loss += c.sum_squares(y[s:e] - x[s:e] @ A[k])
        if math.isfinite(gamma):
            cons.append(c.sum_squares(A[k]) <= gamma)
    w = np.sqrt(np.diff(bounds)).reshape(-1, 1)
    pen = c.sum(c.norm(c.multiply(w, A), 2, axis=0))
    val = _solve(c.Problem(c.Minimize(loss + lam * pen), cons))
    return float(val), np.array(A.value)


def lasso(x, y, lam_scaled):
    c = _cvxpy()
    v = c.Variable(x.shape[1])
    val = _solve(c.Problem(c.Minimize(c.sum_squares(y - x @ v) + lam_scaled * c.norm1(v))))
    return float(val), np.array(v.value)


def single_split(x, y, s, e, lam):
    """Exhaustive scan over splits, each solved by :func:`group_lasso`."""
    best = None
    for d in range(s + 1, e):
        val, _ = group_lasso(x[s:e], y[s:e], [0, d - s, e - s], lam)
        if best is None or val < best[1] - 1e-12:
            best = (d, val)
    return best


def sgl(x, y, lam, gam):
    c = _cvxpy()
    n, p = x.shape
    B = c.Variable((p, n))
    fit = c.sum(c.multiply(x.T, B), axis=0)
    D = B[:, 1:] - B[:, :-1]
    obj = c.sum_squares(y - fit) + lam * c.sum(c.norm(D, 2, axis=0)) + gam * c.sum(c.abs(D))
    return float(_solve(c.Problem(c.Minimize(obj)))), np.array(B.value)


def sgl_grid_p1_n3(x, y, lam, gam, half_width=50.0, points=121, zooms=12):
    """Grid search over the two increments of a length-3 scalar path.

    The level ``b_1`` given the increments is a 1-d least squares problem and
    is solved exactly, so only the increments are gridded.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float)
    xx = float(x @ x)

    def value(d1, d2):
        off = np.stack([np.zeros_like(d1), d1, d1 + d2], axis=-1)
        b = ((y - x * off) @ x) / xx if xx > 0 else np.zeros_like(d1)
        r = y - x * (b[..., None] + off)
        return np.einsum("...i,...i->...", r, r) + (lam + gam) * (np.abs(d1) + np.abs(d2))

    c1 = c2 = 0.0
    w = half_width
    best = float(value(np.zeros(1), np.zeros(1))[0])
    for _ in range(zooms):
        g1, g2 = np.meshgrid(np.linspace(c1 - w, c1 + w, points), np.linspace(c2 - w, c2 + w, points))
        v = value(g1, g2)
        i = np.unravel_index(np.argmin(v), v.shape)
        if v[i] < best:
            best, c1, c2 = float(v[i]), float(g1[i]), float(g2[i])
        w *= 8.0 / points
    return best


# optimality residuals, written against the raw objectives


def group_kkt(x, y, bounds, coef, lam):
    """Max violation of blockwise stationarity for the group-lasso objective."""
    coef = np.asarray(coef, dtype=float)
    w = np.diff(bounds).astype(float)
    grad = np.stack([-2.0 * x[s:e].T @ (y[s:e] - x[s:e] @ coef[k]) for k, (s, e) in enumerate(zip(bounds, bounds[1:]))])
    worst = 0.0
    for i in range(coef.shape[1]):
        a, g = coef[:, i], grad[:, i]
        nrm = math.sqrt(float(np.sum(w * a * a)))
        if nrm > 0:
            worst = max(worst, float(np.max(np.abs((g + lam * w * a / nrm) / np.sqrt(w)))))
        else:
            worst = max(worst, float(np.linalg.norm(g / np.sqrt(w))) - lam)
    return max(worst, 0.0)


def lasso_kkt(x, y, v, mu):
    g = 2.0 * x.T @ (y - x @ v)
    res = np.where(v != 0, np.abs(g - mu * np.sign(v)), np.maximum(np.abs(g) - mu, 0.0))
    return float(res.max(initial=0.0))


def sgl_kkt(x, y, beta, lam, gam):
    """Distance of the negative gradient from the subdifferential, per increment.

    Variables are ``b_1`` and the increments ``d_t = b_{t+1} - b_t``; the
    gradient with respect to ``d_t`` is the suffix sum of per-time gradients.
    """
    beta = np.asarray(beta, dtype=float)
    r = y - np.einsum("tj,jt->t", x, beta)
    per_t = -2.0 * x.T * r[None, :]  # (p, n)
    suffix = np.cumsum(per_t[:, ::-1], axis=1)[:, ::-1]
    worst = float(np.abs(suffix[:, 0]).max())
    d = np.diff(beta, axis=1)
    for t in range(d.shape[1]):
        g = -suffix[:, t + 1]
        dt = d[:, t]
        nz = dt != 0
        if not nz.any():
            soft = np.sign(g) * np.maximum(np.abs(g) - gam, 0.0)
            worst = max(worst, float(np.linalg.norm(soft)) - lam)
            continue
        u = dt / np.linalg.norm(dt)
        res = np.where(nz, np.abs(g - lam * u - gam * np.sign(dt)), np.maximum(np.abs(g) - gam, 0.0))
        worst = max(worst, float(res.max()))
    return max(worst, 0.0)
