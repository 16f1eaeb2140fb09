"""Compiled inner loops working on prefix moments (see ``core.Moments``)."""

import numpy as np
from numba import njit


@njit(cache=True)
def weighted_root(A, B):
    """Positive root ``r`` of ``sum_k A_k / (r + B_k)**2 == 1``.

    Entries with ``A_k == 0`` are ignored. Requires ``sum A_k / B_k**2 > 1``.
    The left-hand side is convex and decreasing, so Newton started at zero
    approaches the root monotonically from below.
    """
    r = 0.0
    for _ in range(200):
        f = -1.0
        df = 0.0
        for k in range(A.shape[0]):
            if A[k] > 0.0:
                q = 1.0 / (r + B[k])
                f += A[k] * q * q
                df -= 2.0 * A[k] * q * q * q
        if df == 0.0:
            break
        step = f / df
        r_new = r - step
        if r_new <= r or abs(r_new - r) <= 1e-15 * r_new:
            r = max(r, r_new)
            break
        r = r_new
    return r


@njit(cache=True)
def group_block(g, H, w, lam, out):
    """Minimise ``sum_k H_k a_k^2 - 2 g_k a_k + lam * sqrt(sum_k w_k a_k^2)``."""
    K = g.shape[0]
    if lam == 0.0:
        for k in range(K):
            out[k] = g[k] / H[k] if H[k] > 0.0 else 0.0
        return
    norm2 = 0.0
    for k in range(K):
        if H[k] > 0.0:
            u = 2.0 * g[k] / np.sqrt(w[k])
            norm2 += u * u
    if norm2 <= lam * lam:
        for k in range(K):
            out[k] = 0.0
        return
    A = np.zeros(K)
    B = np.ones(K)
    for k in range(K):
        if H[k] > 0.0:
            u = 2.0 * g[k] / np.sqrt(w[k])
            dd = 2.0 * H[k] / w[k]
            A[k] = (u / dd) ** 2
            B[k] = lam / dd
    r = weighted_root(A, B)
    for k in range(K):
        if H[k] > 0.0:
            u = 2.0 * g[k] / np.sqrt(w[k])
            dd = 2.0 * H[k] / w[k]
            out[k] = u * r / (dd * r + lam) / np.sqrt(w[k])
        else:
            out[k] = 0.0


@njit(cache=True)
def _block_value(g, H, w, lam, a):
    q = 0.0
    ss = 0.0
    for k in range(a.shape[0]):
        q += H[k] * a[k] * a[k] - 2.0 * g[k] * a[k]
        ss += w[k] * a[k] * a[k]
    return q + lam * np.sqrt(ss)


@njit(cache=True)
def group_lasso_bcd(xx, xy, yy, bounds, lam, alpha, tol, max_iter):
    """Block coordinate descent for the group lasso on a fixed partition.

    ``bounds`` holds the K + 1 segment boundaries. ``alpha`` (K, p) is used as
    warm start and overwritten. Returns ``(objective, sweeps)``.
    """
    K = bounds.shape[0] - 1
    p = xy.shape[1]
    c = np.empty((K, p))
    d = np.empty((K, p))
    Gv = np.zeros((K, p))
    w = np.empty(K)
    yk = 0.0
    for k in range(K):
        s = bounds[k]
        e = bounds[k + 1]
        w[k] = e - s
        yk += yy[e] - yy[s]
        for i in range(p):
            c[k, i] = xy[e, i] - xy[s, i]
            d[k, i] = xx[e, i, i] - xx[s, i, i]
        for j in range(p):
            if alpha[k, j] != 0.0:
                aj = alpha[k, j]
                for i in range(p):
                    Gv[k, i] += aj * (xx[e, j, i] - xx[s, j, i])
    g = np.empty(K)
    H = np.empty(K)
    old = np.empty(K)
    new = np.empty(K)
    sweeps = 0
    for it in range(max_iter):
        sweeps = it + 1
        dec = 0.0
        for i in range(p):
            for k in range(K):
                H[k] = d[k, i]
                old[k] = alpha[k, i]
                g[k] = c[k, i] - (Gv[k, i] - d[k, i] * old[k])
            group_block(g, H, w, lam, new)
            dec += _block_value(g, H, w, lam, old) - _block_value(g, H, w, lam, new)
            for k in range(K):
                delta = new[k] - old[k]
                if delta != 0.0:
                    s = bounds[k]
                    e = bounds[k + 1]
                    alpha[k, i] = new[k]
                    for j in range(p):
                        Gv[k, j] += delta * (xx[e, i, j] - xx[s, i, j])
        if dec < tol:
            break
    obj = yk
    for k in range(K):
        for i in range(p):
            obj += alpha[k, i] * (Gv[k, i] - 2.0 * c[k, i])
    for i in range(p):
        ss = 0.0
        for k in range(K):
            ss += w[k] * alpha[k, i] * alpha[k, i]
        obj += lam * np.sqrt(ss)
    return obj, sweeps


@njit(cache=True)
def enumerate_partitions(xx, xy, yy, s, e, kprime, lam, tol, max_iter):
    """Group lasso over every split of ``(s, e]`` into ``kprime + 1`` blocks.

    Partitions are visited in lexicographic order of their cut points, each
    solve warm-started from the previous one. Returns the best bounds, its
    coefficients, its objective and the number of partitions visited.
    """
    p = xy.shape[1]
    K = kprime + 1
    bounds = np.empty(K + 1, dtype=np.int64)
    bounds[0] = s
    bounds[K] = e
    for k in range(1, K):
        bounds[k] = s + k
    alpha = np.zeros((K, p))
    best_bounds = bounds.copy()
    best_alpha = np.zeros((K, p))
    best_obj = np.inf
    count = 0
    while True:
        obj, _ = group_lasso_bcd(xx, xy, yy, bounds, lam, alpha, tol, max_iter)
        count += 1
        if obj < best_obj:
            best_obj = obj
            best_bounds[:] = bounds
            best_alpha[:, :] = alpha
        # advance to the next combination of interior cuts
        j = K - 1
        while j >= 1 and bounds[j] == e - (K - j):
            j -= 1
        if j < 1:
            break
        bounds[j] += 1
        for k in range(j + 1, K):
            bounds[k] = bounds[k - 1] + 1
    return best_bounds, best_alpha, best_obj, count


@njit(cache=True)
def lasso_cd(xx, xy, yy, s, e, mu, v, tol, max_iter):
    """Coordinate descent for ``sum (y - x^T v)^2 + mu * |v|_1`` on ``(s, e]``.

    ``v`` is the warm start and is overwritten. Returns ``(objective, sweeps)``.
    """
    p = xy.shape[1]
    Gv = np.zeros(p)
    for j in range(p):
        if v[j] != 0.0:
            vj = v[j]
            for i in range(p):
                Gv[i] += vj * (xx[e, j, i] - xx[s, j, i])
    half = 0.5 * mu
    sweeps = 0
    for it in range(max_iter):
        sweeps = it + 1
        dec = 0.0
        for i in range(p):
            di = xx[e, i, i] - xx[s, i, i]
            vi = v[i]
            if di <= 0.0:
                continue
            b = xy[e, i] - xy[s, i] - (Gv[i] - di * vi)
            if b > half:
                vn = (b - half) / di
            elif b < -half:
                vn = (b + half) / di
            else:
                vn = 0.0
            if vn != vi:
                dec += (di * vi * vi - 2.0 * b * vi + mu * abs(vi)) - (di * vn * vn - 2.0 * b * vn + mu * abs(vn))
                delta = vn - vi
                v[i] = vn
                for j in range(p):
                    Gv[j] += delta * (xx[e, i, j] - xx[s, i, j])
        if dec < tol:
            break
    obj = yy[e] - yy[s]
    for i in range(p):
        obj += v[i] * (Gv[i] - 2.0 * (xy[e, i] - xy[s, i])) + mu * abs(v[i])
    return obj, sweeps


@njit(cache=True)
def lasso_split_scan(xx, xy, yy, s, e, delta, stride, lam, tol, max_iter):
    """Best split of ``(s, e]`` by the scaled difference of interval lasso fits.

    Scans ``t`` in ``(s + delta, e - delta)`` with step ``stride``; the score is
    ``sqrt((t-s)(e-t)/(e-s)) * |fit(s, t] - fit(t, e]|_2``. Returns
    ``(t, score)``, or ``(-1, -1.0)`` when there is no candidate.
    """
    p = xy.shape[1]
    left = np.zeros(p)
    right = np.zeros(p)
    best_t = -1
    best_a = -1.0
    t = s + delta + 1
    while t <= e - delta - 1:
        lasso_cd(xx, xy, yy, s, t, lam * np.sqrt(t - s), left, tol, max_iter)
        lasso_cd(xx, xy, yy, t, e, lam * np.sqrt(e - t), right, tol, max_iter)
        ss = 0.0
        for i in range(p):
            diff = left[i] - right[i]
            ss += diff * diff
        a = np.sqrt((t - s) * (e - t) / (e - s)) * np.sqrt(ss)
        if a > best_a:
            best_a = a
            best_t = t
        t += stride
    return best_t, best_a
