"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``.

Loops over matrix rows stay in Python; the work across shifts is
vectorised, so this path is usable for meshes of a few thousand nodes.
"""
import math

import numpy as np


def sturm_counts(kd, ko, md, mo, shifts, pivmin):
    shifts = np.asarray(shifts, dtype=np.float64)
    n = kd.shape[0]
    d = kd[0] - shifts * md[0]
    d[np.abs(d) <= pivmin] = -pivmin
    cnt = (d < 0.0).astype(np.int64)
    for i in range(1, n):
        b = ko[i - 1] - shifts * mo[i - 1]
        d = (kd[i] - shifts * md[i]) - b * b / d
        d[np.abs(d) <= pivmin] = -pivmin
        cnt += d < 0.0
    return cnt


def _mass_apply(md, mo, X):
    Y = X * md
    Y[:, :-1] += X[:, 1:] * mo
    Y[:, 1:] += X[:, :-1] * mo
    return Y


def inverse_iteration(kd, ko, md, mo, shifts, X, n_iter, tiny):
    shifts = np.asarray(shifts, dtype=np.float64)
    n = kd.shape[0]
    ns = shifts.shape[0]
    # factor all shifts at once: arrays are (n, ns)
    dd = kd[:, None] - md[:, None] * shifts[None, :]
    dl = ko[:, None] - mo[:, None] * shifts[None, :]
    du = dl.copy()
    du2 = np.zeros((max(n - 1, 1), ns))
    piv = np.zeros((max(n - 1, 1), ns), dtype=bool)
    for i in range(n - 1):
        keep = np.abs(dd[i]) >= np.abs(dl[i])
        swap = ~keep
        di = np.where(keep & (dd[i] == 0.0), tiny, dd[i])
        fact_k = dl[i] / np.where(keep, di, 1.0)
        fact_s = dd[i] / np.where(swap, dl[i], 1.0)
        new_dl = np.where(keep, fact_k, fact_s)
        new_ddi = np.where(keep, di, dl[i])
        new_du = np.where(keep, du[i], dd[i + 1])
        new_dd1 = np.where(keep, dd[i + 1] - fact_k * du[i],
                           du[i] - fact_s * dd[i + 1])
        if i < n - 2:
            du2[i] = np.where(swap, du[i + 1], 0.0)
            du[i + 1] = np.where(swap, -fact_s * du[i + 1], du[i + 1])
        dl[i] = new_dl
        dd[i] = new_ddi
        du[i] = new_du
        dd[i + 1] = new_dd1
        piv[i] = swap
    dd[n - 1] = np.where(dd[n - 1] == 0.0, tiny, dd[n - 1])
    small = np.abs(dd) < tiny
    dd[small] = np.copysign(tiny, dd[small])

    X = np.asarray(X)
    for _ in range(n_iter):
        y = _mass_apply(md, mo, X).T.copy()  # (n, ns)
        for i in range(n - 1):
            xi = y[i].copy()
            xi1 = y[i + 1]
            p = piv[i]
            y[i] = np.where(p, xi1, xi)
            y[i + 1] = np.where(p, xi - dl[i] * xi1, xi1 - dl[i] * xi)
        y[n - 1] /= dd[n - 1]
        if n > 1:
            y[n - 2] = (y[n - 2] - du[n - 2] * y[n - 1]) / dd[n - 2]
        for i in range(n - 3, -1, -1):
            y[i] = (y[i] - du[i] * y[i + 1] - du2[i] * y[i + 2]) / dd[i]
        Y = y.T
        nrm = np.sqrt(np.einsum("ij,ij->i", Y, _mass_apply(md, mo, Y)))
        X[...] = Y / nrm[:, None]
    return X


def tridiagonal_eigenvalues(diag, off, max_sweeps=60):
    d = [float(v) for v in diag]
    n = len(d)
    e = [float(v) for v in off] + [0.0]
    e = e[:n] if n else e
    eps = 2.220446049250313e-16
    # absolute floor eps*||T|| lets blocks with zero diagonals deflate
    floor = eps * max((abs(d[i]) + abs(e[i]) + (abs(e[i - 1]) if i else 0.0)
                       for i in range(n)), default=0.0)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_sweeps:
                raise ArithmeticError("implicit QL did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if r == 0.0 and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d, dtype=np.float64))
