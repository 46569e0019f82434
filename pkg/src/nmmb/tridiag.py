"""Eigenpairs of a symmetric-definite tridiagonal pencil ``K v = E M v``.

Eigenvalues come from Sturm-count bisection on ``K - s M`` (the inertia of
its LDL^T factorisation counts eigenvalues below ``s``, by Sylvester's law),
so the pencil is never reduced to a dense standard problem. Eigenvectors
come from shifted inverse iteration, followed by M-orthogonalisation inside
groups of eigenvectors whose overlaps exceed the tolerance.
"""
import numpy as np

from . import kernels
from .errors import NumericalError

EPS = np.finfo(np.float64).eps
_SEED = 0x4E4D4D42


def _pivmin(ko):
    return np.finfo(np.float64).tiny * max(1.0, float(np.max(ko * ko, initial=0.0)))


def mass_cholesky_pivots(md, mo):
    """LDL^T pivots of the mass matrix; raises if any is not positive."""
    n = md.shape[0]
    d = np.empty(n)
    d[0] = md[0]
    for i in range(1, n):
        d[i] = md[i] - mo[i - 1] ** 2 / d[i - 1]
        if not d[i] > 0.0:
            break
    if not np.all(d > 0.0):
        raise NumericalError("mass matrix is not positive definite")
    return d


def count_below(kd, ko, md, mo, shifts, backend=None):
    impl = backend or kernels
    shifts = np.atleast_1d(np.asarray(shifts, dtype=np.float64))
    return impl.sturm_counts(kd, ko, md, mo, np.ascontiguousarray(shifts), _pivmin(ko))


def spectrum_bounds(kd, ko, md, mo):
    """An interval [lo, hi] that contains every eigenvalue of the pencil."""
    n = kd.shape[0]
    absk = np.abs(kd).copy()
    absk[:-1] += np.abs(ko)
    absk[1:] += np.abs(ko)
    mrow = md.copy()
    mrow[:-1] -= np.abs(mo)
    mrow[1:] -= np.abs(mo)
    mmin = float(np.min(mrow))
    if mmin <= 0.0:
        mmin = float(np.min(mass_cholesky_pivots(md, mo)))
    hi = float(np.max(absk)) / mmin
    lo = -hi
    for _ in range(64):
        if count_below(kd, ko, md, mo, [hi])[0] == n:
            break
        hi *= 2.0
    for _ in range(64):
        if count_below(kd, ko, md, mo, [lo])[0] == 0:
            break
        lo *= 2.0
    return lo, hi


def bisect(kd, ko, md, mo, indices, lo, hi, rtol=2 * EPS, atol=0.0,
           max_sweeps=400, backend=None):
    """Eigenvalues with the given 0-based indices, by simultaneous bisection.

    Every Sturm count of a sweep tightens the brackets of all requested
    indices, not only the one it was evaluated for.
    """
    idx = np.asarray(indices, dtype=np.int64)
    a = np.full(idx.shape, float(lo))
    b = np.full(idx.shape, float(hi))
    floor = max(atol, 4.0 * np.finfo(np.float64).tiny)
    for _ in range(max_sweeps):
        width = b - a
        tol = np.maximum(floor, rtol * np.maximum(np.abs(a), np.abs(b)))
        active = np.nonzero(width > tol)[0]
        if active.size == 0:
            break
        mids = 0.5 * (a[active] + b[active])
        cnt = count_below(kd, ko, md, mo, mids, backend=backend)
        order = np.argsort(mids, kind="stable")
        xs = mids[order]
        cs = np.maximum.accumulate(cnt[order])
        pos = np.searchsorted(cs, idx, side="right")
        has_hi = pos < xs.size
        b[has_hi] = np.minimum(b[has_hi], xs[pos[has_hi]])
        has_lo = pos > 0
        a[has_lo] = np.maximum(a[has_lo], xs[pos[has_lo] - 1])
    else:
        raise NumericalError("bisection did not converge")
    return 0.5 * (a + b)


def _mass_apply(md, mo, X):
    Y = X * md
    Y[..., :-1] += X[..., 1:] * mo
    Y[..., 1:] += X[..., :-1] * mo
    return Y


def _stiff_apply(kd, ko, X):
    return _mass_apply(kd, ko, X)


def eigenvectors(kd, ko, md, mo, energies, n_iter=2, chunk=256,
                 ortho_tol=1e-12, window=24, backend=None):
    """M-orthonormal eigenvectors (one row each) for sorted ``energies``."""
    impl = backend or kernels
    n = kd.shape[0]
    m = energies.shape[0]
    rng = np.random.default_rng(_SEED)
    V = np.empty((m, n))
    scale = max(float(np.max(np.abs(energies), initial=0.0)), 1.0)
    tiny = EPS * scale * float(np.max(md))
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        X = rng.standard_normal((stop - start, n))
        impl.inverse_iteration(kd, ko, md, mo,
                               np.ascontiguousarray(energies[start:stop]),
                               X, n_iter, tiny)
        V[start:stop] = X
    _repair_orthogonality(V, md, mo, ortho_tol, window, chunk)
    _fix_signs(V)
    return V


def _overlap_reach(V, md, mo, tol, window, chunk):
    """For each row i, the largest s <= window with |v_i^T M v_{i+s}| > tol."""
    m = V.shape[0]
    reach = np.zeros(m, dtype=np.int64)
    for start in range(0, m - 1, chunk):
        stop = min(start + chunk, m - 1)
        top = min(stop + window, m)
        MV = _mass_apply(md, mo, V[start:top])
        for s in range(1, window + 1):
            hi = min(stop, top - s)
            if hi <= start:
                break
            ov = np.abs(np.einsum("ij,ij->i", V[start:hi], MV[s:hi - start + s]))
            hit = np.nonzero(ov > tol)[0] + start
            reach[hit] = s
    return reach


def _repair_orthogonality(V, md, mo, tol, window, chunk=256):
    m = V.shape[0]
    if m < 2:
        return
    reach = _overlap_reach(V, md, mo, tol, window, chunk)
    groups = []
    cur = None
    for i in np.nonzero(reach)[0]:
        lo, hi = int(i), int(i + reach[i])
        if cur and lo <= cur[1]:
            cur[1] = max(cur[1], hi)
        else:
            cur = [lo, hi]
            groups.append(cur)
    for lo, hi in groups:
        lo = max(0, lo - 1)
        hi = min(m - 1, hi + 1)
        block = V[lo:hi + 1]
        for _ in range(2):
            for j in range(block.shape[0]):
                mj = _mass_apply(md, mo, block[j])
                block[j] -= (block[:j] @ mj) @ block[:j]
                block[j] /= np.sqrt(block[j] @ _mass_apply(md, mo, block[j]))


def _fix_signs(V, chunk=256):
    # largest-magnitude nodal value positive
    for start in range(0, V.shape[0], chunk):
        X = V[start:start + chunk]
        pick = np.argmax(np.abs(X), axis=1)
        sgn = np.sign(X[np.arange(X.shape[0]), pick])
        sgn[sgn == 0] = 1.0
        X *= sgn[:, None]


def residual_norms(kd, ko, md, mo, energies, V, chunk=256):
    """||(K - E M) v|| for each row v (Euclidean norm)."""
    out = np.empty(V.shape[0])
    for start in range(0, V.shape[0], chunk):
        X = V[start:start + chunk]
        R = _stiff_apply(kd, ko, X) - energies[start:start + chunk, None] * _mass_apply(md, mo, X)
        out[start:start + chunk] = np.linalg.norm(R, axis=1)
    return out


def euclidean_norms(V, chunk=256):
    out = np.empty(V.shape[0])
    for start in range(0, V.shape[0], chunk):
        out[start:start + chunk] = np.linalg.norm(V[start:start + chunk], axis=1)
    return out


def mass_norms(md, mo, V, chunk=256):
    out = np.empty(V.shape[0])
    for start in range(0, V.shape[0], chunk):
        X = V[start:start + chunk]
        out[start:start + chunk] = np.sqrt(np.einsum("ij,ij->i", X, _mass_apply(md, mo, X)))
    return out
